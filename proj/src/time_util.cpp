#include "hydra/time_util.hpp"

#include <chrono>
#include <cstdio>

namespace hydra {

namespace {

struct CivilTime {
  int year, month, day, hour, minute, second;
};

CivilTime to_civil(Timestamp t) {
  using namespace std::chrono;
  const sys_seconds tp{seconds{t}};
  const auto day_point = floor<days>(tp);
  const year_month_day ymd{day_point};
  const hh_mm_ss hms{tp - day_point};
  return {int(ymd.year()), int(unsigned(ymd.month())), int(unsigned(ymd.day())),
          int(hms.hours().count()), int(hms.minutes().count()),
          int(hms.seconds().count())};
}

bool all_digits(std::string_view s) {
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

int to_int(std::string_view s) {
  int v = 0;
  for (char c : s) v = v * 10 + (c - '0');
  return v;
}

}  // namespace

Timestamp system_now() {
  using namespace std::chrono;
  return duration_cast<seconds>(system_clock::now().time_since_epoch()).count();
}

Clock system_clock() { return &system_now; }

std::string format_iso_basic(Timestamp t) {
  const auto c = to_civil(t);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d%02d%02dT%02d%02d%02dZ", c.year, c.month,
                c.day, c.hour, c.minute, c.second);
  return buf;
}

std::string format_iso_extended(Timestamp t) {
  const auto c = to_civil(t);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ", c.year,
                c.month, c.day, c.hour, c.minute, c.second);
  return buf;
}

std::optional<Timestamp> parse_iso_basic(std::string_view s) {
  if (s.size() != 16 || s[8] != 'T' || s[15] != 'Z') return std::nullopt;
  if (!all_digits(s.substr(0, 8)) || !all_digits(s.substr(9, 6)))
    return std::nullopt;
  using namespace std::chrono;
  const year_month_day ymd{year{to_int(s.substr(0, 4))},
                           month{unsigned(to_int(s.substr(4, 2)))},
                           day{unsigned(to_int(s.substr(6, 2)))}};
  if (!ymd.ok()) return std::nullopt;
  const int hh = to_int(s.substr(9, 2));
  const int mm = to_int(s.substr(11, 2));
  const int ss = to_int(s.substr(13, 2));
  if (hh > 23 || mm > 59 || ss > 60) return std::nullopt;
  const sys_days d{ymd};
  return d.time_since_epoch() / seconds{1} + hh * 3600 + mm * 60 + ss;
}

}  // namespace hydra
