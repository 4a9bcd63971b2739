// cdnet/timeutil.hpp -- ISO-8601 timestamps as UTC epoch seconds.
#pragma once

#include <cctype>
#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>

#include "cdnet/errors.hpp"

namespace cdnet {

namespace detail {

// Howard Hinnant's civil-date algorithms.
inline std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp + (mp < 10 ? 3 : -9);
  y += (m <= 2);
}

inline unsigned parse_fixed_uint(std::string_view s, std::size_t pos,
                                 std::size_t len, std::string_view whole) {
  if (pos + len > s.size())
    throw ParseError("invalid timestamp '" + std::string(whole) + "'");
  unsigned value = 0;
  for (std::size_t i = pos; i < pos + len; ++i) {
    const char c = s[i];
    if (c < '0' || c > '9')
      throw ParseError("invalid timestamp '" + std::string(whole) + "'");
    value = value * 10 + static_cast<unsigned>(c - '0');
  }
  return value;
}

}  // namespace detail

// Accepts YYYY-MM-DD[Thh:mm[:ss][.frac]][Z|+hh:mm|-hh:mm]; no offset means UTC.
inline std::int64_t parse_iso8601(std::string_view text) {
  const std::string_view whole = text;
  if (text.size() < 10 || text[4] != '-' || text[7] != '-')
    throw ParseError("invalid timestamp '" + std::string(whole) + "'");

  const std::int64_t year = detail::parse_fixed_uint(text, 0, 4, whole);
  const unsigned month = detail::parse_fixed_uint(text, 5, 2, whole);
  const unsigned day = detail::parse_fixed_uint(text, 8, 2, whole);
  if (month < 1 || month > 12 || day < 1 || day > 31)
    throw ParseError("invalid timestamp '" + std::string(whole) + "'");

  unsigned hour = 0, minute = 0, second = 0;
  std::int64_t offset = 0;
  std::size_t pos = 10;
  if (pos < text.size() && (text[pos] == 'T' || text[pos] == ' ')) {
    ++pos;
    hour = detail::parse_fixed_uint(text, pos, 2, whole);
    if (pos + 2 >= text.size() || text[pos + 2] != ':')
      throw ParseError("invalid timestamp '" + std::string(whole) + "'");
    minute = detail::parse_fixed_uint(text, pos + 3, 2, whole);
    pos += 5;
    if (pos < text.size() && text[pos] == ':') {
      second = detail::parse_fixed_uint(text, pos + 1, 2, whole);
      pos += 3;
    }
    if (pos < text.size() && text[pos] == '.') {
      ++pos;  // fractional seconds ignored
      while (pos < text.size() &&
             std::isdigit(static_cast<unsigned char>(text[pos])))
        ++pos;
    }
    if (hour > 23 || minute > 59 || second > 60)
      throw ParseError("invalid timestamp '" + std::string(whole) + "'");
  }
  if (pos < text.size()) {
    const char c = text[pos];
    if (c == 'Z') {
      ++pos;
    } else if (c == '+' || c == '-') {
      const unsigned oh = detail::parse_fixed_uint(text, pos + 1, 2, whole);
      std::size_t mpos = pos + 3;
      if (mpos < text.size() && text[mpos] == ':') ++mpos;
      const unsigned om = detail::parse_fixed_uint(text, mpos, 2, whole);
      offset = static_cast<std::int64_t>(oh) * 3600 + om * 60;
      if (c == '-') offset = -offset;
      pos = mpos + 2;
    }
  }
  if (pos != text.size())
    throw ParseError("invalid timestamp '" + std::string(whole) + "'");

  const std::int64_t days = detail::days_from_civil(year, month, day);
  return days * 86400 + hour * 3600 + minute * 60 + second - offset;
}

inline std::string format_iso8601(std::int64_t t) {
  std::int64_t days = t / 86400;
  std::int64_t rem = t % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  std::int64_t year;
  unsigned month, day;
  detail::civil_from_days(days, year, month, day);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02uT%02lld:%02lld:%02lldZ",
                static_cast<long long>(year), month, day,
                static_cast<long long>(rem / 3600),
                static_cast<long long>((rem % 3600) / 60),
                static_cast<long long>(rem % 60));
  return buf;
}

// Filename-safe variant: 20200214T000000Z.
inline std::string format_compact(std::int64_t t) {
  std::string iso = format_iso8601(t);
  std::string out;
  out.reserve(iso.size());
  for (char c : iso)
    if (c != '-' && c != ':') out += c;
  return out;
}

}  // namespace cdnet
