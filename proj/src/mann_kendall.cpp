#include "mann_kendall.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "common.hpp"
#include "stats.hpp"

namespace fdx {

namespace {

// Counts pairs i < j with x_i > x_j (strict inversions). Ties contribute
// nothing: equal elements are merged left-first without counting.
std::int64_t count_inversions(std::vector<double>& a, std::vector<double>& scratch,
                              std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t inv = count_inversions(a, scratch, lo, mid) +
                     count_inversions(a, scratch, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (a[i] <= a[j]) {
      scratch[k++] = a[i++];
    } else {
      inv += static_cast<std::int64_t>(mid - i);
      scratch[k++] = a[j++];
    }
  }
  while (i < mid) scratch[k++] = a[i++];
  while (j < hi) scratch[k++] = a[j++];
  std::copy(scratch.begin() + static_cast<std::ptrdiff_t>(lo),
            scratch.begin() + static_cast<std::ptrdiff_t>(hi),
            a.begin() + static_cast<std::ptrdiff_t>(lo));
  return inv;
}

}  // namespace

MannKendallResult mann_kendall(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 4) throw ValidationError("mann_kendall needs at least 4 points");
  for (double v : x) {
    if (!std::isfinite(v)) throw ValidationError("mann_kendall input must be finite");
  }

  std::vector<double> work(x.begin(), x.end());
  std::vector<double> scratch(n);
  std::int64_t inversions = count_inversions(work, scratch, 0, n);

  // work is sorted now; walk tie groups for the variance correction and to
  // recover S = total - ties - 2 * inversions.
  const std::int64_t nn = static_cast<std::int64_t>(n);
  std::int64_t total_pairs = nn * (nn - 1) / 2;
  std::int64_t tie_pairs = 0;
  double tie_term = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && work[j] == work[i]) ++j;
    std::int64_t t = static_cast<std::int64_t>(j - i);
    if (t > 1) {
      tie_pairs += t * (t - 1) / 2;
      tie_term += static_cast<double>(t) * static_cast<double>(t - 1) *
                  static_cast<double>(2 * t + 5);
    }
    i = j;
  }

  MannKendallResult r;
  r.s = total_pairs - tie_pairs - 2 * inversions;
  r.var_s = (static_cast<double>(nn) * static_cast<double>(nn - 1) *
                 static_cast<double>(2 * nn + 5) -
             tie_term) /
            18.0;
  if (r.var_s <= 0.0) {
    r.var_s = std::max(r.var_s, 0.0);
    r.z = 0.0;
  } else if (r.s > 0) {
    r.z = (static_cast<double>(r.s) - 1.0) / std::sqrt(r.var_s);
  } else if (r.s < 0) {
    r.z = (static_cast<double>(r.s) + 1.0) / std::sqrt(r.var_s);
  } else {
    r.z = 0.0;
  }
  r.p_pos = normal_upper_tail(r.z);
  return r;
}

}  // namespace fdx
