#pragma once

#include "winnet/tensor.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace winnet {

/// Builds a scalar loss. Records onto the tape when one is given.
using LossFn = std::function<Tensor(Tape*)>;

struct GradCheckOptions {
    double eps = 1e-5;
    /// Coordinates probed per parameter tensor; 0 probes every coordinate.
    std::size_t max_coords = 0;
    std::uint64_t seed = 7;
};

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t worst_param = 0;
    std::size_t worst_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    std::size_t probes = 0;
};

/**
 * Compares tape gradients against central differences.
 *
 * Relative error per coordinate is |a - n| / max(|a|, |n|, 1e-8). The loss
 * function must be deterministic.
 */
GradCheckResult grad_check(const LossFn& loss_fn, std::vector<Tensor> params,
                           const GradCheckOptions& options = {});

} // namespace winnet
