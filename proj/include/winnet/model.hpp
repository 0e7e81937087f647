#pragma once

#include "winnet/decomposition.hpp"
#include "winnet/ops.hpp"
#include "winnet/params.hpp"

#include <json.hpp>

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace winnet {

enum class HeadMode { dual, within_only, cross_only };
enum class DecompMode { tdd, moving_avg_1d };

std::string to_string(HeadMode m);
std::string to_string(DecompMode m);
std::string to_string(PadMode m);
HeadMode parse_head_mode(const std::string& s);
DecompMode parse_decomp_mode(const std::string& s);
PadMode parse_pad_mode(const std::string& s);

struct ModelConfig {
    std::size_t sl = 512;           ///< input length
    std::size_t pl = 96;            ///< prediction length
    std::size_t channels = 1;
    std::size_t window = 24;        ///< sub-window size n; grid is n x n
    std::size_t decomp_kernel = 3;  ///< pooling window of the decomposition
    std::size_t conv_kernel = 3;
    double dropout = 0.1;
    HeadMode head_mode = HeadMode::dual;
    DecompMode decomp_mode = DecompMode::tdd;
    PadMode pad_mode = PadMode::trend;
    bool revin_affine = true;

    void validate() const;
    std::size_t head_count() const { return head_mode == HeadMode::dual ? 2 : 1; }
    std::size_t grid_len() const { return window * window; }
};

nlohmann::json to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------- RevIN

inline constexpr double kRevinEps = 1e-5;

/// Per-instance, per-channel window statistics, each [B, C].
struct RevinState {
    Tensor mean;
    Tensor std;
};

struct RevinOutput {
    Tensor normalized;
    RevinState state;
};

/// x: [B, C, L]. gamma/beta ([C]) are applied when non-null.
RevinOutput revin_normalize(Tape* tape, const Tensor& x, const Tensor* gamma, const Tensor* beta,
                            double eps = kRevinEps);

/// y: [B, C, pl]. Undoes the affine step then restores scale and location.
Tensor revin_denormalize(Tape* tape, const Tensor& y, const RevinState& state, const Tensor* gamma,
                         const Tensor* beta, double eps = kRevinEps);

// ------------------------------------------------------ WinNet building blocks

/// Linear map along time to n*n points, then row-major fold into an n x n grid.
WindowGrid subwindow_divide(Tape* tape, const Tensor& x_norm, const Tensor& map_weight,
                            const Tensor& map_bias, std::size_t n);

/// dual -> {within, cross}; within_only -> {within}; cross_only -> {cross}.
std::vector<WindowGrid> make_heads(Tape* tape, const WindowGrid& grid, HeadMode mode);

/// Trend/seasonal split of one head according to the ablation switches.
DecompPair decompose_head(Tape* tape, const WindowGrid& grid, const ModelConfig& config);

/**
 * Decomposition correlation block.
 *
 * Each data channel's trend/seasonal planes form a two-channel image that
 * goes through the shared conv, ReLU and sigmoid; dropout follows, and the
 * single-channel results are stacked back to [B, C, n, n].
 */
Tensor dcb_forward(Tape* tape, const DecompPair& pair, const Tensor& conv_w, const Tensor& conv_b,
                   double dropout_rate, bool training, Rng& rng);

/// Sum of head outputs plus the grid residual, flattened and mapped to [B, C, pl].
Tensor series_decode(Tape* tape, const std::vector<Tensor>& head_outputs, const WindowGrid& x_in,
                     const Tensor& out_weight, const Tensor& out_bias);

// ------------------------------------------------------------- forecasters

/// Common surface of every trainable model: x [B, sl, C] -> [B, pl, C].
class Forecaster {
public:
    virtual ~Forecaster() = default;

    virtual std::string kind() const = 0;
    virtual std::size_t input_length() const = 0;
    virtual std::size_t output_length() const = 0;
    virtual std::size_t channels() const = 0;
    virtual nlohmann::json config_json() const = 0;

    virtual Tensor forward(Tape* tape, const Tensor& x, bool training, Rng& rng) = 0;

    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

protected:
    ParamStore params_;
};

/// Intermediate values of one WinNet forward, for tests and diagnostics.
struct ForwardTrace {
    WindowGrid grid;
    std::vector<DecompPair> decompositions;
    std::vector<Tensor> head_outputs;
};

class WinNet final : public Forecaster {
public:
    explicit WinNet(ModelConfig config, std::uint64_t init_seed = 2021);

    std::string kind() const override { return "winnet"; }
    std::size_t input_length() const override { return config_.sl; }
    std::size_t output_length() const override { return config_.pl; }
    std::size_t channels() const override { return config_.channels; }
    nlohmann::json config_json() const override { return to_json(config_); }
    const ModelConfig& config() const { return config_; }

    Tensor forward(Tape* tape, const Tensor& x, bool training, Rng& rng) override;
    Tensor forward(Tape* tape, const Tensor& x, bool training, Rng& rng, ForwardTrace* trace);

private:
    ModelConfig config_;
};

/// Op sequence ("op [shape]") of one inference forward; depends only on the configuration.
std::vector<std::string> structural_trace(Forecaster& model, std::size_t batch = 1);

std::unique_ptr<Forecaster> make_forecaster(const std::string& kind, const nlohmann::json& config,
                                            std::uint64_t init_seed = 2021);

} // namespace winnet
