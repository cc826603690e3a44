#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "enerlyze/model.hpp"

namespace enerlyze {

/// Source of a calibration program with one ablatable kernel per operation of
/// the universe. Ablating random subsets of kernels gives a design matrix of
/// full column rank, which the bundled benchmarks alone cannot: operations
/// sharing a block always execute in the same ratio.
std::string calibration_source();

/// Operation each kernel of calibration_source() is built around, in kernel
/// order.
std::vector<std::string> calibration_kernels();

CaseDesign calibration_design(std::uint64_t seed, int n_cases = 200);

/// Generates, runs and measures the calibration cases. Case ids carry a
/// "cal_" prefix so they can be mixed with a program's own cases.
Dataset calibration_dataset(const CostTable& table, const SimConfig& sim, const CaseDesign& design, int replicates,
                            int jobs = 1);

}  // namespace enerlyze
