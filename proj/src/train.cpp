#include "winnet/train.hpp"

#include "winnet/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

namespace winnet {

void TrainConfig::validate() const {
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("learning rate must be finite and >= 0");
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
        throw ConfigError("Adam betas must lie in (0, 1)");
    }
    if (batch_size == 0) throw ConfigError("batch size must be >= 1");
    if (max_epochs == 0) throw ConfigError("max epochs must be >= 1");
    if (patience == 0) throw ConfigError("patience must be >= 1");
    if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw ConfigError("lr decay must lie in (0, 1]");
}

double TrainConfig::lr_at(std::size_t epoch) const {
    const std::size_t decays = epoch > decay_after ? epoch - decay_after : 0;
    return lr * std::pow(lr_decay, static_cast<double>(decays));
}

nlohmann::json to_json(const TrainConfig& c) {
    return {{"lr", c.lr},
            {"beta1", c.beta1},
            {"beta2", c.beta2},
            {"adam_eps", c.adam_eps},
            {"batch_size", c.batch_size},
            {"max_epochs", c.max_epochs},
            {"patience", c.patience},
            {"lr_decay", c.lr_decay},
            {"decay_after", c.decay_after},
            {"seed", c.seed},
            {"loss", "mse"}};
}

void adam_step(ParamStore& params, AdamState& state, const TrainConfig& hyper, double lr) {
    const auto& entries = params.entries();
    if (state.m.empty()) {
        for (const auto& e : entries) {
            state.m.emplace_back(e.value.numel(), 0.0);
            state.v.emplace_back(e.value.numel(), 0.0);
        }
    }
    if (state.m.size() != entries.size()) throw DimensionError("Adam state does not match parameters");
    const std::size_t t = ++state.step;
    for (const auto& e : entries) {
        for (double g : e.value.grad()) {
            if (!std::isfinite(g)) {
                throw DivergenceError("non-finite gradient in '" + e.name + "' at optimizer step " + std::to_string(t));
            }
        }
    }
    const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < entries.size(); ++i) {
        Tensor p = entries[i].value;
        auto g = p.grad();
        auto w = p.data();
        auto& m = state.m[i];
        auto& v = state.v[i];
        for (std::size_t j = 0; j < w.size(); ++j) {
            m[j] = hyper.beta1 * m[j] + (1.0 - hyper.beta1) * g[j];
            v[j] = hyper.beta2 * v[j] + (1.0 - hyper.beta2) * g[j] * g[j];
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            w[j] -= lr * mhat / (std::sqrt(vhat) + hyper.adam_eps);
        }
    }
}

// -------------------------------------------------------------- metrics

ErrorMetrics metrics(const Tensor& pred, const Tensor& truth) {
    MetricsAccumulator acc;
    acc.add(pred, truth);
    return acc.result();
}

void MetricsAccumulator::add(const Tensor& pred, const Tensor& truth) {
    if (pred.shape() != truth.shape()) {
        throw DimensionError("metrics: prediction " + shape_str(pred.shape()) + " vs truth " + shape_str(truth.shape()));
    }
    for (std::size_t i = 0; i < pred.numel(); ++i) {
        const long double d = static_cast<long double>(pred[i]) - truth[i];
        sq_ += d * d;
        abs_ += d < 0 ? -d : d;
    }
    count_ += pred.numel();
}

ErrorMetrics MetricsAccumulator::result() const {
    if (count_ == 0) return {};
    return {static_cast<double>(sq_ / count_), static_cast<double>(abs_ / count_)};
}

nlohmann::json to_json(const MetricsReport& r) {
    return {{"split", r.split},
            {"mse", r.errors.mse},
            {"mae", r.errors.mae},
            {"samples", r.samples},
            {"pl", r.horizon},
            {"config", r.config},
            {"wall_clock_s", r.wall_clock_s}};
}

ErrorMetrics evaluate_model(Forecaster& model, const SampleSource& data, std::size_t batch_size) {
    MetricsAccumulator acc;
    Rng rng(0);
    Tensor x, y;
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < data.size(); start += batch_size) {
        const std::size_t end = std::min(data.size(), start + batch_size);
        idx.resize(end - start);
        std::iota(idx.begin(), idx.end(), start);
        data.fill(idx, x, y);
        acc.add(model.forward(nullptr, x, false, rng), y);
    }
    return acc.result();
}

// -------------------------------------------------------------- training

nlohmann::json to_json(const TrainResult& r) {
    nlohmann::json epochs = nlohmann::json::array();
    for (const auto& e : r.history) {
        epochs.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_mse", e.val_mse}, {"lr", e.lr}});
    }
    return {{"history", epochs},
            {"best_epoch", r.best_epoch},
            {"best_val_mse", r.best_val_mse},
            {"stopped_early", r.stopped_early}};
}

TrainResult train(Forecaster& model, const TrainConfig& config, const SampleSource& train_set,
                  const SampleSource& val_set) {
    config.validate();
    if (train_set.size() == 0) throw ConfigError("training split yields no windows");
    if (val_set.size() == 0) throw ConfigError("validation split yields no windows");
    if (train_set.input_length() != model.input_length() || train_set.output_length() != model.output_length() ||
        train_set.channels() != model.channels()) {
        throw DimensionError("dataset windows do not match the model's sl/pl/channels");
    }
    const auto t0 = std::chrono::steady_clock::now();
    TrainResult result;
    AdamState adam;
    Rng dropout_rng(config.seed);
    std::vector<std::size_t> order(train_set.size());
    std::vector<std::vector<double>> best_params = model.params().snapshot();
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t bad_epochs = 0;
    Tensor x, y;

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        const double lr = config.lr_at(epoch);
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng shuffle_rng(config.seed * 0x9E3779B97F4A7C15ULL + epoch);
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            train_set.fill(std::span<const std::size_t>(order.data() + start, end - start), x, y);
            Tape tape;
            model.params().zero_grad();
            Tensor pred = model.forward(&tape, x, true, dropout_rng);
            Tensor loss = mse_loss(&tape, pred, y);
            if (!std::isfinite(loss[0])) {
                throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                      std::to_string(batches + 1));
            }
            backward(tape, loss);
            adam_step(model.params(), adam, config, lr);
            loss_sum += loss[0];
            ++batches;
        }

        const double val_mse = evaluate_model(model, val_set).mse;
        result.history.push_back({epoch, loss_sum / static_cast<double>(batches), val_mse, lr});
        if (val_mse < best_val) {
            best_val = val_mse;
            result.best_epoch = epoch;
            best_params = model.params().snapshot();
            bad_epochs = 0;
        } else if (++bad_epochs >= config.patience) {
            result.stopped_early = epoch < config.max_epochs;
            break;
        }
    }
    model.params().restore(best_params);
    result.best_val_mse = best_val;
    result.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

MetricsReport evaluate(const Checkpoint& checkpoint, const DatasetSpec& spec, const std::string& split) {
    const auto t0 = std::chrono::steady_clock::now();
    Forecaster& model = *checkpoint.model;
    PreparedData data = prepare_data(spec, model.input_length(), model.output_length());
    if (data.frame->cols() != model.channels()) {
        throw DimensionError("checkpoint expects " + std::to_string(model.channels()) + " channels, dataset has " +
                             std::to_string(data.frame->cols()));
    }
    const WindowDataset* set = nullptr;
    if (split == "train") set = &data.train;
    else if (split == "val") set = &data.val;
    else if (split == "test") set = &data.test;
    else throw ConfigError("unknown split '" + split + "' (train, val, test)");

    MetricsReport report;
    report.split = split;
    report.errors = evaluate_model(model, *set);
    report.samples = set->size();
    report.horizon = model.output_length();
    report.config = {{"model", checkpoint.model_kind}, {"model_config", checkpoint.config}};
    report.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

} // namespace winnet
