#include "ger/format.hpp"

#include <array>
#include <charconv>

namespace ger {

std::string format_double(double value) {
  if (value == 0.0) return "0";  // folds -0
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return ec == std::errc{} ? std::string(buf.data(), ptr) : std::string("nan");
}

}  // namespace ger
