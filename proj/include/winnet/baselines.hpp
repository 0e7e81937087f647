#pragma once

#include "winnet/model.hpp"

namespace winnet {

enum class BaselineKind { linear, rlinear, dlinear };

std::string to_string(BaselineKind k);
BaselineKind parse_baseline_kind(const std::string& s);

struct BaselineConfig {
    BaselineKind kind = BaselineKind::linear;
    std::size_t sl = 512;
    std::size_t pl = 96;
    std::size_t channels = 1;
    std::size_t ma_kernel = 25;  ///< dlinear decomposition window

    void validate() const;
};

nlohmann::json to_json(const BaselineConfig& c);
BaselineConfig baseline_config_from_json(const std::string& kind, const nlohmann::json& j);

/**
 * One-layer comparators, weights shared across channels.
 *
 *  linear:  x -> W x + b along time
 *  rlinear: RevIN (affine) around the linear map
 *  dlinear: moving-average split, separate maps for trend and seasonal, summed
 */
class LinearBaseline final : public Forecaster {
public:
    explicit LinearBaseline(BaselineConfig config, std::uint64_t init_seed = 2021);

    std::string kind() const override { return to_string(config_.kind); }
    std::size_t input_length() const override { return config_.sl; }
    std::size_t output_length() const override { return config_.pl; }
    std::size_t channels() const override { return config_.channels; }
    nlohmann::json config_json() const override { return to_json(config_); }
    const BaselineConfig& config() const { return config_; }

    Tensor forward(Tape* tape, const Tensor& x, bool training, Rng& rng) override;

private:
    BaselineConfig config_;
};

std::unique_ptr<Forecaster> make_baseline(const BaselineConfig& config, std::uint64_t init_seed = 2021);

} // namespace winnet
