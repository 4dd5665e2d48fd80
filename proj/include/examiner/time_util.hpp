#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace examiner {

// Seconds since 1970-01-01T00:00:00Z.
using EpochSeconds = std::int64_t;

// Accepts `YYYY-MM-DDTHH:MM:SS` followed by `Z` or a `+HH:MM` / `-HH:MM`
// offset (a space is accepted in place of `T`). Returns nullopt when the text
// is not a valid timestamp.
std::optional<EpochSeconds> parse_iso8601(std::string_view text);

// Always UTC with a `Z` suffix.
std::string format_iso8601(EpochSeconds t);

// `YYYY-MM-DD` at midnight UTC.
std::optional<EpochSeconds> parse_date(std::string_view text);

EpochSeconds floor_to_midnight(EpochSeconds t);

}  // namespace examiner
