#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "rng.hpp"
#include "stats.hpp"

using namespace fdx;

TEST_CASE("stable hash is FNV-1a with the published 64-bit constants") {
  CHECK(stable_hash("") == 14695981039346656037ULL);
  CHECK(stable_hash("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(stable_hash("score:") != stable_hash("wind:"));
}

TEST_CASE("generator streams are reproducible and label-separated") {
  Rng a = Rng::substream(42, "score:P1/U1/C1");
  Rng b = Rng::substream(42, "score:P1/U1/C1");
  Rng c = Rng::substream(42, "score:P1/U1/C2");
  Rng d = Rng::substream(43, "score:P1/U1/C1");

  bool same_ab = true, diff_ac = false, diff_ad = false;
  for (int i = 0; i < 256; ++i) {
    std::uint32_t va = a.next_u32(), vb = b.next_u32(), vc = c.next_u32(), vd = d.next_u32();
    same_ab = same_ab && (va == vb);
    diff_ac = diff_ac || (va != vc);
    diff_ad = diff_ad || (va != vd);
  }
  CHECK(same_ab);
  CHECK(diff_ac);
  CHECK(diff_ad);
}

TEST_CASE("uniform and below stay inside their ranges") {
  Rng rng(7);
  for (int i = 0; i < 10000; ++i) {
    double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    std::uint64_t k = rng.below(13);
    CHECK(k < 13);
  }
  Rng one(3);
  for (int i = 0; i < 100; ++i) CHECK(one.below(1) == 0);
  Rng span(3);
  for (int i = 0; i < 1000; ++i) {
    double v = span.uniform(-2.0, 5.0);
    CHECK(v >= -2.0);
    CHECK(v < 5.0);
  }
}

TEST_CASE("gaussian draws have standard-normal moments") {
  Rng rng(123);
  const int n = 100000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    double g = rng.gaussian();
    sum += g;
    sum_sq += g * g;
  }
  double mean = sum / n;
  double var = sum_sq / n - mean * mean;
  CHECK(std::abs(mean) < 0.02);
  CHECK(var == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("normal CDF and quantile agree with reference values") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(normal_cdf(1.96) == doctest::Approx(0.9750021048517795).epsilon(1e-10));
  CHECK(normal_cdf(-1.0) == doctest::Approx(0.15865525393145707).epsilon(1e-10));
  CHECK(normal_upper_tail(3.0) ==
        doctest::Approx(0.0013498980316300933).epsilon(1e-10));

  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-12));
  // The two tail quantiles the scoring convention is built on.
  CHECK(normal_quantile(0.999) == doctest::Approx(3.090232306167813).epsilon(1e-9));
  CHECK(normal_quantile(0.9995) == doctest::Approx(3.2905267314918945).epsilon(1e-9));

  for (double p : {0.001, 0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99, 0.999}) {
    CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-10));
  }
  for (double z : {-3.0, -1.0, 0.0, 0.5, 2.0, 4.0}) {
    CHECK(normal_cdf(z) + normal_upper_tail(z) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("moment statistics match hand-computed values") {
  std::vector<double> v = {10.0, 10.0, 13.0};
  CHECK(mean(v) == doctest::Approx(11.0));
  CHECK(population_variance(v) == doctest::Approx(2.0));  // devs -1,-1,2 -> 6/3

  std::vector<double> sym = {-2.0, -1.0, 0.0, 1.0, 2.0};
  CHECK(skewness(sym) == doctest::Approx(0.0).epsilon(1e-12));

  // Two-point symmetric distribution: m4 / var^2 = 1, excess = -2.
  std::vector<double> twopoint = {-1.0, 1.0, -1.0, 1.0};
  CHECK(excess_kurtosis(twopoint) == doctest::Approx(-2.0).epsilon(1e-12));

  std::vector<double> constant = {5.0, 5.0, 5.0};
  CHECK(population_variance(constant) == doctest::Approx(0.0));
  CHECK(skewness(constant) == 0.0);
  CHECK(excess_kurtosis(constant) == 0.0);

  std::vector<double> rp = {3.0, -4.0};
  CHECK(rms(rp) == doctest::Approx(std::sqrt(12.5)));
  CHECK(peak(rp) == doctest::Approx(4.0));
}

TEST_CASE("empirical quantile interpolates between order statistics") {
  std::vector<double> sorted = {1.0, 2.0, 3.0, 4.0};
  CHECK(quantile(sorted, 0.0) == doctest::Approx(1.0));
  CHECK(quantile(sorted, 1.0) == doctest::Approx(4.0));
  CHECK(quantile(sorted, 0.5) == doctest::Approx(2.5));  // h = 1.5

  // 1..1000 at the 99.9th percentile: h = 999 * 0.999 = 998.001.
  std::vector<double> big(1000);
  std::iota(big.begin(), big.end(), 1.0);
  CHECK(quantile(big, 0.999) == doctest::Approx(999.001).epsilon(1e-9));

  // Independent oracle on random data: sort + manual interpolation.
  Rng rng(5);
  std::vector<double> data(257);
  for (auto& x : data) x = rng.uniform(-10.0, 10.0);
  std::sort(data.begin(), data.end());
  for (double p : {0.1, 0.25, 0.5, 0.75, 0.9, 0.999}) {
    double h = p * static_cast<double>(data.size() - 1);
    std::size_t lo = static_cast<std::size_t>(h);
    double frac = h - static_cast<double>(lo);
    double expect = data[lo];
    if (lo + 1 < data.size()) expect += frac * (data[lo + 1] - data[lo]);
    CHECK(quantile(data, p) == doctest::Approx(expect).epsilon(1e-12));
  }
}
