#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace faultconsult {

using Timestamp = std::chrono::sys_time<std::chrono::nanoseconds>;

// RFC 3339 date-time: `YYYY-MM-DDTHH:MM:SS[.fraction](Z|+hh:mm|-hh:mm)`.
// Fractions longer than nine digits are rejected rather than truncated.
std::optional<Timestamp> parse_rfc3339(std::string_view text);

// UTC form with a `Z` suffix; the fraction is emitted only when non-zero and
// with trailing zeros trimmed, so parse(format(t)) == t.
std::string format_rfc3339(Timestamp t);

// Seconds between two instants as a double.
double seconds_between(Timestamp from, Timestamp to);

}  // namespace faultconsult
