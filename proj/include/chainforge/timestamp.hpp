#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace chainforge {

// Seconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

// Accepts "YYYY-MM-DD", "YYYY-MM-DD HH:MM:SS", "YYYY-MM-DDTHH:MM:SS[.ffffff]"
// followed by an optional "Z", " UTC" or "+HH:MM"/"-HH:MM" offset.
std::optional<Timestamp> parse_timestamp(std::string_view text);

// "YYYY-MM-DDTHH:MM:SSZ"
std::string format_timestamp(Timestamp t);

// Calendar quarter of the instant, e.g. "2021Q3".
std::string quarter_of(Timestamp t);

// Ordinal used to enumerate consecutive quarters: year * 4 + (quarter - 1).
int quarter_index(std::string_view quarter);
std::string quarter_name(int index);

}  // namespace chainforge
