#include "ssmamba/num/text.hpp"

#include <charconv>
#include <cmath>
#include <limits>

namespace ssmamba::num {

namespace {
template <class F>
std::string shortest(F v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

template <class F>
std::optional<F> parse(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s == "inf" || s == "+inf") return std::numeric_limits<F>::infinity();
  if (s == "-inf") return -std::numeric_limits<F>::infinity();
  if (s.front() == '+') s.remove_prefix(1);
  F v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || std::isnan(v)) return std::nullopt;
  return v;
}
}  // namespace

std::string to_shortest(double v) { return shortest(v); }
std::string to_shortest(float v) { return shortest(v); }

std::optional<double> parse_double(std::string_view s) { return parse<double>(s); }
std::optional<float> parse_float(std::string_view s) { return parse<float>(s); }

std::string_view trim(std::string_view s) {
  const char* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(s.substr(start));
      return parts;
    }
    parts.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace ssmamba::num
