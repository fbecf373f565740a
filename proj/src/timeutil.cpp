#include "voterbias/timeutil.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>

namespace voterbias {

namespace {

bool read_int(std::string_view text, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > text.size()) return false;
  const char* first = text.data() + pos;
  const char* last = first + len;
  for (const char* p = first; p != last; ++p) {
    if (*p < '0' || *p > '9') return false;
  }
  return std::from_chars(first, last, out).ec == std::errc{};
}

UnixSeconds floor_div(UnixSeconds a, UnixSeconds b) {
  UnixSeconds q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

std::optional<UnixSeconds> parse_dump_timestamp(std::string_view text) {
  // 2010-01-01T10:00:00
  if (text.size() < 19) return std::nullopt;
  if (text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ') ||
      text[13] != ':' || text[16] != ':') {
    return std::nullopt;
  }
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  if (!read_int(text, 0, 4, y) || !read_int(text, 5, 2, mo) || !read_int(text, 8, 2, d) ||
      !read_int(text, 11, 2, h) || !read_int(text, 14, 2, mi) || !read_int(text, 17, 2, s)) {
    return std::nullopt;
  }
  if (text.size() > 19) {
    if (text[19] != '.' || text.size() == 20) return std::nullopt;
    for (std::size_t i = 20; i < text.size(); ++i) {
      if (text[i] < '0' || text[i] > '9') return std::nullopt;
    }
  }
  if (h > 23 || mi > 59 || s > 60) return std::nullopt;

  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  const auto days_since_epoch = sys_days{ymd}.time_since_epoch().count();
  return static_cast<UnixSeconds>(days_since_epoch) * kSecondsPerDay + h * 3600 + mi * 60 + s;
}

std::string format_timestamp(UnixSeconds t) {
  using namespace std::chrono;
  const UnixSeconds days = floor_div(t, kSecondsPerDay);
  const UnixSeconds rem = t - days * kSecondsPerDay;
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(rem / 3600), static_cast<int>((rem / 60) % 60),
                static_cast<int>(rem % 60));
  return buf;
}

UnixSeconds day_start(UnixSeconds t) { return floor_div(t, kSecondsPerDay) * kSecondsPerDay; }

int day_of_week(UnixSeconds t) {
  using namespace std::chrono;
  const weekday wd{sys_days{std::chrono::days{floor_div(t, kSecondsPerDay)}}};
  return static_cast<int>(wd.iso_encoding()) - 1;
}

int hour_of_day(UnixSeconds t) {
  return static_cast<int>((t - day_start(t)) / 3600);
}

}  // namespace voterbias
