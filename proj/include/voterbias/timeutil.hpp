#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace voterbias {

/// Seconds since 1970-01-01T00:00:00 UTC.
using UnixSeconds = std::int64_t;

inline constexpr UnixSeconds kSecondsPerDay = 86400;

/// Parses "YYYY-MM-DDTHH:MM:SS[.fff]" (dump format, UTC). Fractional
/// seconds are truncated. Returns nullopt on malformed input.
std::optional<UnixSeconds> parse_dump_timestamp(std::string_view text);

std::string format_timestamp(UnixSeconds t);

UnixSeconds day_start(UnixSeconds t);

/// Monday = 0 ... Sunday = 6.
int day_of_week(UnixSeconds t);

int hour_of_day(UnixSeconds t);

}  // namespace voterbias
