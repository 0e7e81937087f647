#include "winnet/accounting.hpp"

#include "winnet/error.hpp"

namespace winnet {

namespace {

Accounting finish(std::vector<CountTerm> terms, std::string formula) {
    Accounting a;
    for (const auto& t : terms) a.total += t.value;
    a.breakdown = std::move(terms);
    a.formula = std::move(formula);
    return a;
}

} // namespace

Accounting count_params(const ModelConfig& c) {
    const std::uint64_t nn = static_cast<std::uint64_t>(c.window) * c.window;
    const std::uint64_t heads = c.head_count();
    const std::uint64_t ck = c.conv_kernel;
    std::vector<CountTerm> terms{
        {"map_weight", c.sl * nn},
        {"map_bias", nn},
        {"dcb_conv", heads * (2 * ck * ck + 1)},
        {"out_weight", c.pl * nn},
        {"out_bias", c.pl},
        {"revin_affine", c.revin_affine ? 2 * static_cast<std::uint64_t>(c.channels) : 0},
    };
    return finish(std::move(terms), "sl*n^2 + n^2 + heads*(2*conv_k^2 + 1) + pl*n^2 + pl + 2*c*[affine]");
}

Accounting count_params(const BaselineConfig& c) {
    const std::uint64_t layer = static_cast<std::uint64_t>(c.sl) * c.pl + c.pl;
    std::vector<CountTerm> terms;
    if (c.kind == BaselineKind::dlinear) {
        terms = {{"trend_linear", layer}, {"seasonal_linear", layer}};
    } else {
        terms = {{"linear", layer}};
    }
    if (c.kind == BaselineKind::rlinear) terms.push_back({"revin_affine", 2 * static_cast<std::uint64_t>(c.channels)});
    return finish(std::move(terms), "layers*(sl*pl + pl) + 2*c*[rlinear]");
}

Accounting estimate_macs(const ModelConfig& c) {
    if (c.sl == 0 || c.pl == 0 || c.channels == 0 || c.window == 0 || c.conv_kernel == 0 || c.decomp_kernel == 0) {
        throw ConfigError("estimate_macs: every extent must be positive");
    }
    const std::uint64_t nn = static_cast<std::uint64_t>(c.window) * c.window;
    const std::uint64_t ch = c.channels;
    const std::uint64_t heads = c.head_count();
    const std::uint64_t ck = c.conv_kernel;
    const std::uint64_t k = c.decomp_kernel;
    const std::uint64_t pool_window = c.decomp_mode == DecompMode::tdd ? k * k : k;
    std::vector<CountTerm> terms{
        {"map_linear", ch * c.sl * nn},
        {"out_linear", ch * c.pl * nn},
        {"dcb_conv", heads * ch * nn * 2 * ck * ck},
        {"decomp_pool", heads * ch * nn * pool_window},
    };
    return finish(std::move(terms),
                  "c*(sl*n^2 + pl*n^2) + heads*c*n^2*2*conv_k^2 + heads*c*n^2*k^2 (k for 1-D decomposition)");
}

nlohmann::json to_json(const Accounting& a) {
    nlohmann::json terms = nlohmann::json::object();
    for (const auto& t : a.breakdown) terms[t.name] = t.value;
    return {{"total", a.total}, {"breakdown", terms}, {"formula", a.formula}};
}

} // namespace winnet
