#pragma once

#include "winnet/checkpoint.hpp"
#include "winnet/data.hpp"
#include "winnet/model.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace winnet {

struct TrainConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::size_t batch_size = 32;
    std::size_t max_epochs = 30;
    std::size_t patience = 5;
    double lr_decay = 0.5;       ///< multiplier applied per epoch once decay starts
    std::size_t decay_after = 3; ///< epochs at the base rate
    std::uint64_t seed = 2021;

    void validate() const;
    /// Learning rate for a 1-based epoch.
    double lr_at(std::size_t epoch) const;
};

nlohmann::json to_json(const TrainConfig& c);

// ----------------------------------------------------------------- Adam

struct AdamState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    std::size_t step = 0;
};

/**
 * One bias-corrected Adam update from the gradients held in `params`.
 * Throws DivergenceError naming the step when a gradient is not finite.
 */
void adam_step(ParamStore& params, AdamState& state, const TrainConfig& hyper, double lr);

// -------------------------------------------------------------- metrics

struct ErrorMetrics {
    double mse = 0.0;
    double mae = 0.0;
};

ErrorMetrics metrics(const Tensor& pred, const Tensor& truth);

/// Streaming accumulator for metrics over many batches.
class MetricsAccumulator {
public:
    void add(const Tensor& pred, const Tensor& truth);
    ErrorMetrics result() const;
    std::size_t count() const { return count_; }

private:
    long double sq_ = 0.0L;
    long double abs_ = 0.0L;
    std::size_t count_ = 0;
};

struct MetricsReport {
    std::string split;
    ErrorMetrics errors;
    std::size_t samples = 0;
    std::size_t horizon = 0;
    nlohmann::json config;
    double wall_clock_s = 0.0;
};

nlohmann::json to_json(const MetricsReport& r);

/// Deterministic pass over every sample (dropout off).
ErrorMetrics evaluate_model(Forecaster& model, const SampleSource& data, std::size_t batch_size = 256);

// -------------------------------------------------------------- training

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_mse = 0.0;
    double lr = 0.0;
};

struct TrainResult {
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;
    double best_val_mse = 0.0;
    bool stopped_early = false;
    double wall_clock_s = 0.0;
};

nlohmann::json to_json(const TrainResult& r);

/**
 * Minimises MSE over `train`, checking `val` after every epoch. The best
 * validation parameters are restored into `model` before returning.
 */
TrainResult train(Forecaster& model, const TrainConfig& config, const SampleSource& train_set,
                  const SampleSource& val_set);

/// Loads the data named by `spec` with the checkpoint's lengths and scores one split.
MetricsReport evaluate(const Checkpoint& checkpoint, const DatasetSpec& spec, const std::string& split);

} // namespace winnet
