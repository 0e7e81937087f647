#include "winnet/model.hpp"

#include "winnet/baselines.hpp"
#include "winnet/error.hpp"

#include <cmath>

namespace winnet {

std::string to_string(HeadMode m) {
    switch (m) {
    case HeadMode::dual: return "dual";
    case HeadMode::within_only: return "within_only";
    case HeadMode::cross_only: return "cross_only";
    }
    return "?";
}

std::string to_string(DecompMode m) { return m == DecompMode::tdd ? "tdd" : "moving_avg_1d"; }
std::string to_string(PadMode m) { return m == PadMode::trend ? "trend" : "zero"; }

HeadMode parse_head_mode(const std::string& s) {
    if (s == "dual") return HeadMode::dual;
    if (s == "within_only" || s == "within") return HeadMode::within_only;
    if (s == "cross_only" || s == "cross") return HeadMode::cross_only;
    throw ConfigError("unknown head mode '" + s + "' (dual, within_only, cross_only)");
}

DecompMode parse_decomp_mode(const std::string& s) {
    if (s == "tdd") return DecompMode::tdd;
    if (s == "moving_avg_1d" || s == "1d") return DecompMode::moving_avg_1d;
    throw ConfigError("unknown decomposition mode '" + s + "' (tdd, moving_avg_1d)");
}

PadMode parse_pad_mode(const std::string& s) {
    if (s == "trend") return PadMode::trend;
    if (s == "zero") return PadMode::zero;
    throw ConfigError("unknown pad mode '" + s + "' (trend, zero)");
}

void ModelConfig::validate() const {
    if (sl < 1 || pl < 1 || channels < 1) throw ConfigError("sl, pl and channels must be >= 1");
    if (window < 2) throw ConfigError("sub-window size must be >= 2, got " + std::to_string(window));
    if (decomp_kernel % 2 == 0 || decomp_kernel < 3) {
        throw ConfigError("decomposition kernel must be odd and >= 3, got " + std::to_string(decomp_kernel));
    }
    if ((decomp_kernel - 1) / 2 >= window) {
        throw ConfigError("decomposition kernel " + std::to_string(decomp_kernel) + " too wide for window " +
                          std::to_string(window));
    }
    if (conv_kernel % 2 == 0) throw ConfigError("conv kernel must be odd, got " + std::to_string(conv_kernel));
    if (conv_kernel > window) throw ConfigError("conv kernel larger than window");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
}

nlohmann::json to_json(const ModelConfig& c) {
    return {{"sl", c.sl},
            {"pl", c.pl},
            {"channels", c.channels},
            {"window", c.window},
            {"decomp_kernel", c.decomp_kernel},
            {"conv_kernel", c.conv_kernel},
            {"dropout", c.dropout},
            {"head_mode", to_string(c.head_mode)},
            {"decomp_mode", to_string(c.decomp_mode)},
            {"pad_mode", to_string(c.pad_mode)},
            {"revin_affine", c.revin_affine}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.sl = j.at("sl").get<std::size_t>();
    c.pl = j.at("pl").get<std::size_t>();
    c.channels = j.at("channels").get<std::size_t>();
    c.window = j.at("window").get<std::size_t>();
    c.decomp_kernel = j.at("decomp_kernel").get<std::size_t>();
    c.conv_kernel = j.at("conv_kernel").get<std::size_t>();
    c.dropout = j.at("dropout").get<double>();
    c.head_mode = parse_head_mode(j.at("head_mode").get<std::string>());
    c.decomp_mode = parse_decomp_mode(j.at("decomp_mode").get<std::string>());
    c.pad_mode = parse_pad_mode(j.at("pad_mode").get<std::string>());
    c.revin_affine = j.at("revin_affine").get<bool>();
    return c;
}

// ---------------------------------------------------------------- RevIN

RevinOutput revin_normalize(Tape* tape, const Tensor& x, const Tensor* gamma, const Tensor* beta, double eps) {
    if (x.rank() != 3) throw DimensionError("revin: input must be [B, C, L], got " + shape_str(x.shape()));
    const std::size_t B = x.dim(0), C = x.dim(1), L = x.dim(2);
    if (L < 2) throw ConfigError("revin: window length must be >= 2");
    if ((gamma && gamma->numel() != C) || (beta && beta->numel() != C)) {
        throw DimensionError("revin: affine parameters must hold one value per channel");
    }
    Tensor mean(Shape{B, C}), stdev(Shape{B, C});
    Tensor xhat(x.shape());
    Tensor out(x.shape());
    for (std::size_t p = 0; p < B * C; ++p) {
        const double* xp = x.data().data() + p * L;
        double m = 0.0;
        for (std::size_t t = 0; t < L; ++t) m += xp[t];
        m /= static_cast<double>(L);
        double v = 0.0;
        for (std::size_t t = 0; t < L; ++t) v += (xp[t] - m) * (xp[t] - m);
        v /= static_cast<double>(L);
        const double s = std::sqrt(v + eps);
        mean[p] = m;
        stdev[p] = s;
        const std::size_t c = p % C;
        const double g = gamma ? (*gamma)[c] : 1.0;
        const double b = beta ? (*beta)[c] : 0.0;
        for (std::size_t t = 0; t < L; ++t) {
            const double h = (xp[t] - m) / s;
            xhat[p * L + t] = h;
            out[p * L + t] = g * h + b;
        }
    }
    Tensor gam = gamma ? *gamma : Tensor();
    Tensor bet = beta ? *beta : Tensor();
    if (Tape::tracks(tape, {&x, gamma, beta})) {
        tape->record("revin_norm", {x}, out, [=]() mutable {
            auto g = out.grad();
            const bool has_g = !gam.empty(), has_b = !bet.empty();
            std::span<double> xg = x.requires_grad() ? x.grad() : std::span<double>{};
            std::span<double> gg = has_g && gam.requires_grad() ? gam.grad() : std::span<double>{};
            std::span<double> bg = has_b && bet.requires_grad() ? bet.grad() : std::span<double>{};
            for (std::size_t p = 0; p < B * C; ++p) {
                const std::size_t c = p % C;
                const double scale = (has_g ? gam[c] : 1.0) / stdev[p];
                for (std::size_t t = 0; t < L; ++t) {
                    const double go = g[p * L + t];
                    if (!xg.empty()) xg[p * L + t] += go * scale;
                    if (!gg.empty()) gg[c] += go * xhat[p * L + t];
                    if (!bg.empty()) bg[c] += go;
                }
            }
        });
    }
    return {out, {mean, stdev}};
}

Tensor revin_denormalize(Tape* tape, const Tensor& y, const RevinState& state, const Tensor* gamma,
                         const Tensor* beta, double eps) {
    if (y.rank() != 3) throw DimensionError("revin: output must be [B, C, pl], got " + shape_str(y.shape()));
    const std::size_t B = y.dim(0), C = y.dim(1), L = y.dim(2);
    if (state.mean.rank() != 2 || state.mean.dim(0) != B || state.mean.dim(1) != C) {
        throw DimensionError("revin: state " + shape_str(state.mean.shape()) + " does not match output " +
                             shape_str(y.shape()));
    }
    if ((gamma && gamma->numel() != C) || (beta && beta->numel() != C)) {
        throw DimensionError("revin: affine parameters must hold one value per channel");
    }
    const double guard = eps * eps;
    Tensor out(y.shape());
    for (std::size_t p = 0; p < B * C; ++p) {
        const std::size_t c = p % C;
        const double g = gamma ? (*gamma)[c] + guard : 1.0;
        const double b = beta ? (*beta)[c] : 0.0;
        for (std::size_t t = 0; t < L; ++t) {
            out[p * L + t] = (y[p * L + t] - b) / g * state.std[p] + state.mean[p];
        }
    }
    Tensor gam = gamma ? *gamma : Tensor();
    Tensor bet = beta ? *beta : Tensor();
    Tensor stdev = state.std;
    if (Tape::tracks(tape, {&y, gamma, beta})) {
        tape->record("revin_denorm", {y}, out, [=]() mutable {
            auto g = out.grad();
            const bool has_g = !gam.empty(), has_b = !bet.empty();
            std::span<double> yg = y.requires_grad() ? y.grad() : std::span<double>{};
            std::span<double> gg = has_g && gam.requires_grad() ? gam.grad() : std::span<double>{};
            std::span<double> bg = has_b && bet.requires_grad() ? bet.grad() : std::span<double>{};
            for (std::size_t p = 0; p < B * C; ++p) {
                const std::size_t c = p % C;
                const double gv = has_g ? gam[c] + guard : 1.0;
                const double bv = has_b ? bet[c] : 0.0;
                const double scale = stdev[p] / gv;
                for (std::size_t t = 0; t < L; ++t) {
                    const double go = g[p * L + t];
                    if (!yg.empty()) yg[p * L + t] += go * scale;
                    if (!bg.empty()) bg[c] -= go * scale;
                    if (!gg.empty()) gg[c] -= go * (y[p * L + t] - bv) * scale / gv;
                }
            }
        });
    }
    return out;
}

// ------------------------------------------------------ WinNet building blocks

WindowGrid subwindow_divide(Tape* tape, const Tensor& x_norm, const Tensor& map_weight, const Tensor& map_bias,
                            std::size_t n) {
    if (x_norm.rank() != 3) {
        throw DimensionError("subwindow_divide: input must be [B, C, sl], got " + shape_str(x_norm.shape()));
    }
    if (map_weight.rank() != 2 || map_weight.dim(0) != n * n) {
        throw DimensionError("subwindow_divide: map weight must be [n*n, sl] = [" + std::to_string(n * n) + ", " +
                             std::to_string(x_norm.dim(2)) + "], got " + shape_str(map_weight.shape()));
    }
    Tensor mapped = linear(tape, x_norm, map_weight, map_bias);
    return WindowGrid(reshape(tape, mapped, Shape{x_norm.dim(0), x_norm.dim(1), n, n}));
}

std::vector<WindowGrid> make_heads(Tape* tape, const WindowGrid& grid, HeadMode mode) {
    switch (mode) {
    case HeadMode::dual: return {grid, WindowGrid(transpose_last2(tape, grid.values))};
    case HeadMode::within_only: return {grid};
    case HeadMode::cross_only: return {WindowGrid(transpose_last2(tape, grid.values))};
    }
    return {};
}

DecompPair decompose_head(Tape* tape, const WindowGrid& grid, const ModelConfig& config) {
    if (config.decomp_mode == DecompMode::tdd) {
        return tdd_decompose(tape, grid, config.decomp_kernel, config.pad_mode);
    }
    const std::size_t B = grid.batch(), C = grid.channels(), n = grid.n();
    Tensor flat = reshape(tape, grid.values, Shape{B, C, n * n});
    DecompPair pair = moving_avg_decompose_1d(tape, flat, config.decomp_kernel);
    return {reshape(tape, pair.trend, Shape{B, C, n, n}), reshape(tape, pair.seasonal, Shape{B, C, n, n})};
}

Tensor dcb_forward(Tape* tape, const DecompPair& pair, const Tensor& conv_w, const Tensor& conv_b,
                   double dropout_rate, bool training, Rng& rng) {
    if (pair.trend.shape() != pair.seasonal.shape()) {
        throw DimensionError("dcb: trend and seasonal shapes differ");
    }
    const Shape grid_shape = pair.trend.shape();
    Tensor stacked = stack_pair(tape, pair.trend, pair.seasonal);
    Tensor z = conv2d(tape, stacked, conv_w, conv_b);
    z = sigmoid(tape, relu(tape, z));
    z = dropout(tape, z, dropout_rate, training, rng);
    return reshape(tape, z, grid_shape);
}

Tensor series_decode(Tape* tape, const std::vector<Tensor>& head_outputs, const WindowGrid& x_in,
                     const Tensor& out_weight, const Tensor& out_bias) {
    if (head_outputs.empty()) throw UsageError("series_decode: no head outputs");
    Tensor acc = head_outputs.front();
    for (std::size_t i = 1; i < head_outputs.size(); ++i) acc = add(tape, acc, head_outputs[i]);
    acc = add(tape, acc, x_in.values);
    const std::size_t n = x_in.n();
    Tensor flat = reshape(tape, acc, Shape{x_in.batch(), x_in.channels(), n * n});
    return linear(tape, flat, out_weight, out_bias);
}

// ------------------------------------------------------------- WinNet

namespace {

void init_uniform(Tensor t, double bound, Rng& rng) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : t.data()) v = dist(rng);
}

} // namespace

WinNet::WinNet(ModelConfig config, std::uint64_t init_seed) : config_(config) {
    config_.validate();
    Rng rng(init_seed);
    const std::size_t nn = config_.grid_len();
    const std::size_t ck = config_.conv_kernel;
    const double map_bound = 1.0 / std::sqrt(static_cast<double>(config_.sl));
    init_uniform(params_.add("map_weight", {nn, config_.sl}), map_bound, rng);
    init_uniform(params_.add("map_bias", {nn}), map_bound, rng);
    const double conv_bound = 1.0 / std::sqrt(static_cast<double>(2 * ck * ck));
    if (config_.head_mode != HeadMode::cross_only) {
        init_uniform(params_.add("conv_w_within", {1, 2, ck, ck}), conv_bound, rng);
        init_uniform(params_.add("conv_b_within", {1}), conv_bound, rng);
    }
    if (config_.head_mode != HeadMode::within_only) {
        init_uniform(params_.add("conv_w_cross", {1, 2, ck, ck}), conv_bound, rng);
        init_uniform(params_.add("conv_b_cross", {1}), conv_bound, rng);
    }
    init_uniform(params_.add("out_weight", {config_.pl, nn}), 1.0 / std::sqrt(static_cast<double>(nn)), rng);
    params_.add("out_bias", {config_.pl});
    if (config_.revin_affine) {
        for (double& v : params_.add("revin_gamma", {config_.channels}).data()) v = 1.0;
        params_.add("revin_beta", {config_.channels});
    }
}

Tensor WinNet::forward(Tape* tape, const Tensor& x, bool training, Rng& rng) {
    return forward(tape, x, training, rng, nullptr);
}

Tensor WinNet::forward(Tape* tape, const Tensor& x, bool training, Rng& rng, ForwardTrace* trace) {
    if (x.rank() != 3 || x.dim(1) != config_.sl || x.dim(2) != config_.channels) {
        throw DimensionError("winnet: input must be [B, " + std::to_string(config_.sl) + ", " +
                             std::to_string(config_.channels) + "], got " + shape_str(x.shape()));
    }
    if (!x.all_finite()) throw InputError("winnet: input contains non-finite values");

    std::optional<Tensor> gamma, beta;
    if (config_.revin_affine) {
        gamma = params_.get("revin_gamma");
        beta = params_.get("revin_beta");
    }
    const Tensor* g = gamma ? &*gamma : nullptr;
    const Tensor* b = beta ? &*beta : nullptr;

    Tensor xt = permute_021(tape, x);
    RevinOutput norm = revin_normalize(tape, xt, g, b);
    WindowGrid grid = subwindow_divide(tape, norm.normalized, params_.get("map_weight"), params_.get("map_bias"),
                                       config_.window);
    std::vector<WindowGrid> heads = make_heads(tape, grid, config_.head_mode);

    std::vector<std::string> conv_names;
    if (config_.head_mode != HeadMode::cross_only) conv_names.emplace_back("within");
    if (config_.head_mode != HeadMode::within_only) conv_names.emplace_back("cross");

    std::vector<Tensor> outputs;
    for (std::size_t h = 0; h < heads.size(); ++h) {
        DecompPair pair = decompose_head(tape, heads[h], config_);
        Tensor out = dcb_forward(tape, pair, params_.get("conv_w_" + conv_names[h]),
                                 params_.get("conv_b_" + conv_names[h]), config_.dropout, training, rng);
        if (trace) trace->decompositions.push_back(pair);
        outputs.push_back(out);
    }
    if (trace) {
        trace->grid = grid;
        trace->head_outputs = outputs;
    }
    Tensor decoded = series_decode(tape, outputs, grid, params_.get("out_weight"), params_.get("out_bias"));
    Tensor denorm = revin_denormalize(tape, decoded, norm.state, g, b);
    return permute_021(tape, denorm);
}

std::vector<std::string> structural_trace(Forecaster& model, std::size_t batch) {
    Tape tape;
    Rng rng(0);
    Tensor x(Shape{batch, model.input_length(), model.channels()});
    for (std::size_t i = 0; i < x.numel(); ++i) x[i] = std::sin(0.1 * static_cast<double>(i));
    x.set_requires_grad(true);
    model.forward(&tape, x, false, rng);
    return tape.trace();
}

std::unique_ptr<Forecaster> make_forecaster(const std::string& kind, const nlohmann::json& config,
                                            std::uint64_t init_seed) {
    if (kind == "winnet") return std::make_unique<WinNet>(model_config_from_json(config), init_seed);
    return make_baseline(baseline_config_from_json(kind, config), init_seed);
}

} // namespace winnet
