#pragma once

#include "winnet/baselines.hpp"
#include "winnet/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace winnet {

struct CountTerm {
    std::string name;
    std::uint64_t value = 0;
};

/// A total with the per-layer terms that sum to it.
struct Accounting {
    std::uint64_t total = 0;
    std::vector<CountTerm> breakdown;
    std::string formula;
};

/// Analytic trainable-scalar count. No validation: any extents are counted.
Accounting count_params(const ModelConfig& config);
Accounting count_params(const BaselineConfig& config);

/**
 * Multiply-accumulates per sample (B = 1) for the dominant layers:
 * mapping and output linears, the DCB convolutions and the pooling sums.
 * Rejects configurations with a zero extent.
 */
Accounting estimate_macs(const ModelConfig& config);

nlohmann::json to_json(const Accounting& a);

} // namespace winnet
