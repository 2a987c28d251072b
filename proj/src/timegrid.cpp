#include "timegrid.hpp"

#include <array>
#include <charconv>

#include "common.hpp"
#include "text.hpp"

namespace fdx {

namespace {

constexpr std::int64_t kSecondsPerDay = 86400;

bool is_leap(std::int64_t y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int days_in_month(std::int64_t y, int m) {
  static const std::array<int, 12> d = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (m == 2 && is_leap(y)) return 29;
  return d[m - 1];
}

// Days from 1970-01-01 to y-m-d (civil calendar, Hinnant's algorithm).
std::int64_t days_from_civil(std::int64_t y, int m, int d) {
  y -= m <= 2;
  std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  std::int64_t yoe = y - era * 400;
  std::int64_t doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  std::int64_t doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + doe - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, int& m, int& d) {
  z += 719468;
  std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  std::int64_t doe = z - era * 146097;
  std::int64_t yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  std::int64_t year = yoe + era * 400;
  std::int64_t doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  std::int64_t mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = year + (m <= 2);
}

int parse_fixed(std::string_view s, std::size_t pos, std::size_t len) {
  int v = 0;
  for (std::size_t i = pos; i < pos + len; ++i) {
    char c = s[i];
    if (c < '0' || c > '9') throw ValidationError("bad timestamp: " + std::string(s));
    v = v * 10 + (c - '0');
  }
  return v;
}

}  // namespace

bool on_grid(Timestamp ts) {
  std::int64_t r = ts % kGridStepSeconds;
  if (r < 0) r += kGridStepSeconds;
  return r == 0;
}

Timestamp parse_timestamp(std::string_view iso) {
  // YYYY-MM-DDTHH:MM:SSZ
  if (iso.size() != 20 || iso[4] != '-' || iso[7] != '-' || iso[10] != 'T' ||
      iso[13] != ':' || iso[16] != ':' || iso[19] != 'Z') {
    throw ValidationError("bad timestamp (expected YYYY-MM-DDTHH:MM:SSZ): " +
                          std::string(iso));
  }
  std::int64_t y = parse_fixed(iso, 0, 4);
  int mo = parse_fixed(iso, 5, 2);
  int d = parse_fixed(iso, 8, 2);
  int h = parse_fixed(iso, 11, 2);
  int mi = parse_fixed(iso, 14, 2);
  int s = parse_fixed(iso, 17, 2);
  if (mo < 1 || mo > 12 || d < 1 || d > days_in_month(y, mo) || h > 23 || mi > 59 ||
      s > 59) {
    throw ValidationError("bad timestamp: " + std::string(iso));
  }
  return days_from_civil(y, mo, d) * kSecondsPerDay + h * 3600 + mi * 60 + s;
}

std::string format_timestamp(Timestamp ts) {
  std::int64_t days = ts / kSecondsPerDay;
  std::int64_t sod = ts % kSecondsPerDay;
  if (sod < 0) {
    sod += kSecondsPerDay;
    --days;
  }
  std::int64_t y;
  int mo, d;
  civil_from_days(days, y, mo, d);
  int h = static_cast<int>(sod / 3600);
  int mi = static_cast<int>(sod % 3600 / 60);
  int s = static_cast<int>(sod % 60);
  char buf[24];
  auto two = [](char* p, int v) {
    p[0] = static_cast<char>('0' + v / 10);
    p[1] = static_cast<char>('0' + v % 10);
  };
  std::int64_t yy = y;
  for (int i = 3; i >= 0; --i) {
    buf[i] = static_cast<char>('0' + yy % 10);
    yy /= 10;
  }
  buf[4] = '-';
  two(buf + 5, mo);
  buf[7] = '-';
  two(buf + 8, d);
  buf[10] = 'T';
  two(buf + 11, h);
  buf[13] = ':';
  two(buf + 14, mi);
  buf[16] = ':';
  two(buf + 17, s);
  buf[19] = 'Z';
  return std::string(buf, 20);
}

std::vector<Timestamp> build_time_grid(Timestamp start, Timestamp end) {
  if (!on_grid(start)) {
    throw ValidationError("grid start is off the 10-minute grid: " +
                          format_timestamp(start));
  }
  if (!on_grid(end)) {
    throw ValidationError("grid end is off the 10-minute grid: " + format_timestamp(end));
  }
  if (start >= end) throw ValidationError("grid start must precede end");
  std::vector<Timestamp> out;
  out.reserve(static_cast<std::size_t>((end - start) / kGridStepSeconds));
  for (Timestamp t = start; t < end; t += kGridStepSeconds) out.push_back(t);
  return out;
}

}  // namespace fdx
