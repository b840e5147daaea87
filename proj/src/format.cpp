#include "copan/format.hpp"

#include <array>
#include <charconv>
#include <cmath>

namespace copan {

std::string format_number(double value) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

double round2(double value) { return std::round(value * 100.0) / 100.0; }

}  // namespace copan
