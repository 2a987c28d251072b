#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace fdx {

// UTC timestamps carried as seconds since the Unix epoch. The pipeline's
// canonical cadence is a 10-minute grid.
using Timestamp = std::int64_t;

constexpr std::int64_t kGridStepSeconds = 600;

bool on_grid(Timestamp ts);

// Strict "YYYY-MM-DDTHH:MM:SSZ" with calendar validation.
Timestamp parse_timestamp(std::string_view iso);
std::string format_timestamp(Timestamp ts);

// All grid points in [start, end), step 600 s. Throws ValidationError for
// off-grid or inverted endpoints.
std::vector<Timestamp> build_time_grid(Timestamp start, Timestamp end);

}  // namespace fdx
