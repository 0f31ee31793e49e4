#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ssmamba::num {

// Shortest decimal that round-trips to the same value.
std::string to_shortest(double v);
std::string to_shortest(float v);

// Whole-string parse; nullopt on trailing garbage or empty input. Accepts
// "inf" / "-inf" but not NaN.
std::optional<double> parse_double(std::string_view s);
std::optional<float> parse_float(std::string_view s);

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);

}  // namespace ssmamba::num
