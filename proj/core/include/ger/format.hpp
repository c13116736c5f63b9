#pragma once

#include <string>

namespace ger {

/// Shortest round-trip decimal form; stable across runs of the same build.
std::string format_double(double value);

}  // namespace ger
