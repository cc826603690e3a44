#pragma once

#include <cstdint>
#include <string>

namespace enerlyze::testing {

/// Source text of a random well-typed, terminating program: helper methods
/// that call only earlier helpers, an init() and a frame(int, float, bool).
/// Loop trip counts are small constants and indices are masked into range,
/// so runs never fail at runtime.
std::string random_program_source(std::uint64_t seed);

}  // namespace enerlyze::testing
