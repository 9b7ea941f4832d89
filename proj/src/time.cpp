#include "d2wfp/time.hpp"

#include <charconv>
#include <cstdio>
#include <limits>

#include "d2wfp/error.hpp"

namespace d2wfp {

namespace {

struct Civil {
  std::int64_t year;
  unsigned month;
  unsigned day;
};

// Inverse of days_from_civil (era-based, valid for the full int64 day range we use).
Civil civil_from_days(std::int64_t z) noexcept {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const auto doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  return {m <= 2 ? y + 1 : y, m, d};
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) noexcept {
  const auto q = a / b;
  return (a % b != 0 && ((a < 0) != (b < 0))) ? q - 1 : q;
}

std::string format_impl(UtcTime t, bool always_fraction) {
  const std::int64_t secs = floor_div(t.micros, 1'000'000);
  const std::int64_t frac = t.micros - secs * 1'000'000;
  const std::int64_t days = floor_div(secs, 86400);
  const std::int64_t sod = secs - days * 86400;
  const auto c = civil_from_days(days);
  char buf[64];
  int n = std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02lld:%02lld:%02lld",
                        static_cast<long long>(c.year), c.month, c.day,
                        static_cast<long long>(sod / 3600), static_cast<long long>(sod / 60 % 60),
                        static_cast<long long>(sod % 60));
  std::string out(buf, static_cast<std::size_t>(n));
  if (always_fraction || frac != 0) {
    n = std::snprintf(buf, sizeof buf, ".%06lld", static_cast<long long>(frac));
    out.append(buf, static_cast<std::size_t>(n));
  }
  out.push_back('Z');
  return out;
}

template <typename T>
bool parse_num(std::string_view s, T& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size();
}

}  // namespace

std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) noexcept {
  y -= m <= 2 ? 1 : 0;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m > 2 ? m - 3 : m + 9) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

std::string format_iso8601(UtcTime t) { return format_impl(t, false); }
std::string format_iso8601_micros(UtcTime t) { return format_impl(t, true); }

std::optional<UtcTime> parse_iso8601(std::string_view s) {
  // YYYY-MM-DDTHH:MM:SS[.ffffff]Z
  if (s.size() < 20 || s.back() != 'Z' || s[4] != '-' || s[7] != '-' || s[10] != 'T' ||
      s[13] != ':' || s[16] != ':')
    return std::nullopt;
  int year = 0;
  unsigned mon = 0, day = 0, hh = 0, mm = 0, ss = 0;
  if (!parse_num(s.substr(0, 4), year) || !parse_num(s.substr(5, 2), mon) ||
      !parse_num(s.substr(8, 2), day) || !parse_num(s.substr(11, 2), hh) ||
      !parse_num(s.substr(14, 2), mm) || !parse_num(s.substr(17, 2), ss))
    return std::nullopt;
  std::int64_t frac = 0;
  const auto rest = s.substr(19, s.size() - 20);
  if (!rest.empty()) {
    if (rest.size() != 7 || rest[0] != '.' || !parse_num(rest.substr(1), frac)) return std::nullopt;
  }
  if (mon < 1 || mon > 12 || day < 1 || day > 31 || hh > 23 || mm > 59 || ss > 60) return std::nullopt;
  auto t = utc_from_civil(year, mon, day, hh, mm, ss);
  t.micros += frac;
  return t;
}

UtcTime utc_from_civil(int year, unsigned month, unsigned day, unsigned hour, unsigned minute,
                       unsigned second) {
  const auto days = days_from_civil(year, month, day);
  return UtcTime::from_seconds(days * 86400 + hour * 3600 + minute * 60 + second);
}

std::string_view to_string(EpochKind kind) noexcept {
  switch (kind) {
    case EpochKind::UnixSeconds: return "unix-seconds";
    case EpochKind::UnixMillis: return "unix-millis";
    case EpochKind::PrtimeMicros: return "prtime-micros";
    case EpochKind::WebkitMicros: return "webkit-micros";
    case EpochKind::FiletimeTicks: return "filetime-ticks";
  }
  return "unknown";
}

NormalizedTime normalize_timestamp(std::int64_t raw, EpochKind kind) {
  using Wide = __int128;
  constexpr Wide kGapMicros = Wide{kEpochGap1601Seconds} * 1'000'000;
  Wide micros = 0;
  switch (kind) {
    case EpochKind::UnixSeconds: micros = Wide{raw} * 1'000'000; break;
    case EpochKind::UnixMillis: micros = Wide{raw} * 1'000; break;
    case EpochKind::PrtimeMicros: micros = raw; break;
    case EpochKind::WebkitMicros: micros = Wide{raw} - kGapMicros; break;
    case EpochKind::FiletimeTicks:
      if (raw < 0) throw Error(ErrorCode::Invalid, "negative FILETIME");
      micros = Wide{raw} / 10 - kGapMicros;
      break;
  }
  if (micros > std::numeric_limits<std::int64_t>::max() ||
      micros < std::numeric_limits<std::int64_t>::min())
    throw Error(ErrorCode::Invalid, "timestamp overflows microsecond range");
  const UtcTime t{static_cast<std::int64_t>(micros)};
  return {t, within_sanity_window(t)};
}

NormalizedTime filetime_to_utc(std::uint64_t ticks) {
  const UtcTime t{static_cast<std::int64_t>(ticks / 10) - kEpochGap1601Seconds * 1'000'000};
  return {t, within_sanity_window(t)};
}

}  // namespace d2wfp
