#include "examiner/time_util.hpp"

#include <chrono>
#include <cstdio>

namespace examiner {

namespace {

bool digits(std::string_view s, std::size_t pos, std::size_t n, int& out) {
  if (pos + n > s.size()) return false;
  int v = 0;
  for (std::size_t i = pos; i < pos + n; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
    v = v * 10 + (s[i] - '0');
  }
  out = v;
  return true;
}

std::optional<EpochSeconds> civil_to_epoch(int y, int m, int d) {
  using namespace std::chrono;
  year_month_day ymd{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return sys_days{ymd}.time_since_epoch().count() * 86400LL;
}

}  // namespace

std::optional<EpochSeconds> parse_date(std::string_view text) {
  int y, mo, d;
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  if (!digits(text, 0, 4, y) || !digits(text, 5, 2, mo) || !digits(text, 8, 2, d)) return std::nullopt;
  return civil_to_epoch(y, mo, d);
}

std::optional<EpochSeconds> parse_iso8601(std::string_view text) {
  if (text.size() < 19) return std::nullopt;
  auto date = parse_date(text.substr(0, 10));
  if (!date) return std::nullopt;
  if (text[10] != 'T' && text[10] != ' ') return std::nullopt;
  int hh, mm, ss;
  if (!digits(text, 11, 2, hh) || text[13] != ':' || !digits(text, 14, 2, mm) || text[16] != ':' ||
      !digits(text, 17, 2, ss)) {
    return std::nullopt;
  }
  if (hh > 23 || mm > 59 || ss > 59) return std::nullopt;
  EpochSeconds t = *date + hh * 3600LL + mm * 60LL + ss;
  auto rest = text.substr(19);
  if (rest == "Z" || rest == "z") return t;
  if (rest.size() == 6 && (rest[0] == '+' || rest[0] == '-') && rest[3] == ':') {
    int oh, om;
    if (!digits(rest, 1, 2, oh) || !digits(rest, 4, 2, om) || oh > 23 || om > 59) return std::nullopt;
    EpochSeconds offset = oh * 3600LL + om * 60LL;
    // Local time = UTC + offset.
    return rest[0] == '+' ? t - offset : t + offset;
  }
  return std::nullopt;
}

std::string format_iso8601(EpochSeconds t) {
  using namespace std::chrono;
  EpochSeconds day_count = t >= 0 ? t / 86400 : (t - 86399) / 86400;
  EpochSeconds secs = t - day_count * 86400;
  year_month_day ymd{sys_days{days{day_count}}};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long long>(secs / 3600), static_cast<long long>((secs / 60) % 60),
                static_cast<long long>(secs % 60));
  return buf;
}

EpochSeconds floor_to_midnight(EpochSeconds t) {
  EpochSeconds day_count = t >= 0 ? t / 86400 : (t - 86399) / 86400;
  return day_count * 86400;
}

}  // namespace examiner
