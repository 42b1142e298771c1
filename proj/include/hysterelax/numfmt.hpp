#pragma once

#include <string>

#include <fmt/format.h>

namespace hysterelax {

/// Formats with 17 significant digits so that output files round-trip exactly.
inline std::string num(double x) { return fmt::format("{:.17g}", x); }

}  // namespace hysterelax
