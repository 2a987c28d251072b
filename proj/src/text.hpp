#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fdx {

// Shortest round-trip decimal form, locale-independent. Reruns must produce
// byte-identical files, so all numeric output funnels through here.
std::string format_double(double v);
std::string format_int(std::int64_t v);

// Strict parsers: the whole token must be consumed.
std::optional<double> parse_double(std::string_view s);
std::optional<std::int64_t> parse_int(std::string_view s);

std::vector<std::string_view> split(std::string_view line, char sep);
std::string join(const std::vector<std::string>& parts, char sep);

bool starts_with(std::string_view s, std::string_view prefix);

}  // namespace fdx
