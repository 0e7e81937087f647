#include "winnet/baselines.hpp"

#include "winnet/error.hpp"

#include <cmath>

namespace winnet {

std::string to_string(BaselineKind k) {
    switch (k) {
    case BaselineKind::linear: return "linear";
    case BaselineKind::rlinear: return "rlinear";
    case BaselineKind::dlinear: return "dlinear";
    }
    return "?";
}

BaselineKind parse_baseline_kind(const std::string& s) {
    if (s == "linear") return BaselineKind::linear;
    if (s == "rlinear") return BaselineKind::rlinear;
    if (s == "dlinear") return BaselineKind::dlinear;
    throw ConfigError("unknown model kind '" + s + "' (winnet, linear, rlinear, dlinear)");
}

void BaselineConfig::validate() const {
    if (sl < 1 || pl < 1 || channels < 1) throw ConfigError("sl, pl and channels must be >= 1");
    if (kind == BaselineKind::dlinear && ma_kernel % 2 == 0) {
        throw ConfigError("dlinear moving-average window must be odd");
    }
    if (kind == BaselineKind::rlinear && sl < 2) throw ConfigError("rlinear needs sl >= 2");
}

nlohmann::json to_json(const BaselineConfig& c) {
    return {{"sl", c.sl}, {"pl", c.pl}, {"channels", c.channels}, {"ma_kernel", c.ma_kernel}};
}

BaselineConfig baseline_config_from_json(const std::string& kind, const nlohmann::json& j) {
    BaselineConfig c;
    c.kind = parse_baseline_kind(kind);
    c.sl = j.at("sl").get<std::size_t>();
    c.pl = j.at("pl").get<std::size_t>();
    c.channels = j.at("channels").get<std::size_t>();
    c.ma_kernel = j.value("ma_kernel", std::size_t{25});
    return c;
}

LinearBaseline::LinearBaseline(BaselineConfig config, std::uint64_t init_seed) : config_(config) {
    config_.validate();
    Rng rng(init_seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(config_.sl));
    std::uniform_real_distribution<double> dist(-bound, bound);
    auto init = [&](Tensor t) {
        for (double& v : t.data()) v = dist(rng);
    };
    if (config_.kind == BaselineKind::dlinear) {
        init(params_.add("trend_weight", {config_.pl, config_.sl}));
        init(params_.add("trend_bias", {config_.pl}));
        init(params_.add("seasonal_weight", {config_.pl, config_.sl}));
        init(params_.add("seasonal_bias", {config_.pl}));
    } else {
        init(params_.add("weight", {config_.pl, config_.sl}));
        init(params_.add("bias", {config_.pl}));
    }
    if (config_.kind == BaselineKind::rlinear) {
        for (double& v : params_.add("revin_gamma", {config_.channels}).data()) v = 1.0;
        params_.add("revin_beta", {config_.channels});
    }
}

Tensor LinearBaseline::forward(Tape* tape, const Tensor& x, bool, Rng&) {
    if (x.rank() != 3 || x.dim(1) != config_.sl || x.dim(2) != config_.channels) {
        throw DimensionError(kind() + ": input must be [B, " + std::to_string(config_.sl) + ", " +
                             std::to_string(config_.channels) + "], got " + shape_str(x.shape()));
    }
    if (!x.all_finite()) throw InputError(kind() + ": input contains non-finite values");
    Tensor xt = permute_021(tape, x);
    Tensor y;
    switch (config_.kind) {
    case BaselineKind::linear:
        y = linear(tape, xt, params_.get("weight"), params_.get("bias"));
        break;
    case BaselineKind::rlinear: {
        Tensor g = params_.get("revin_gamma"), b = params_.get("revin_beta");
        RevinOutput norm = revin_normalize(tape, xt, &g, &b);
        y = linear(tape, norm.normalized, params_.get("weight"), params_.get("bias"));
        y = revin_denormalize(tape, y, norm.state, &g, &b);
        break;
    }
    case BaselineKind::dlinear: {
        DecompPair pair = moving_avg_decompose_1d(tape, xt, config_.ma_kernel);
        Tensor t = linear(tape, pair.trend, params_.get("trend_weight"), params_.get("trend_bias"));
        Tensor s = linear(tape, pair.seasonal, params_.get("seasonal_weight"), params_.get("seasonal_bias"));
        y = add(tape, t, s);
        break;
    }
    }
    return permute_021(tape, y);
}

std::unique_ptr<Forecaster> make_baseline(const BaselineConfig& config, std::uint64_t init_seed) {
    return std::make_unique<LinearBaseline>(config, init_seed);
}

} // namespace winnet
