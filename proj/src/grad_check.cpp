#include "winnet/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace winnet {

GradCheckResult grad_check(const LossFn& loss_fn, std::vector<Tensor> params,
                           const GradCheckOptions& options) {
    for (auto& p : params) {
        p.set_requires_grad(true);
        p.grad();
        p.zero_grad();
    }
    Tape tape;
    Tensor loss = loss_fn(&tape);
    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    if (loss.requires_grad()) {
        backward(tape, loss);
        for (auto& p : params) {
            auto g = p.grad();
            analytic.emplace_back(g.begin(), g.end());
        }
    } else {
        for (auto& p : params) analytic.emplace_back(p.numel(), 0.0);
    }

    std::mt19937_64 rng(options.seed);
    GradCheckResult result;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor& p = params[pi];
        std::vector<std::size_t> coords(p.numel());
        std::iota(coords.begin(), coords.end(), std::size_t{0});
        if (options.max_coords != 0 && coords.size() > options.max_coords) {
            std::shuffle(coords.begin(), coords.end(), rng);
            coords.resize(options.max_coords);
        }
        for (std::size_t idx : coords) {
            const double saved = p[idx];
            p[idx] = saved + options.eps;
            const double up = loss_fn(nullptr)[0];
            p[idx] = saved - options.eps;
            const double down = loss_fn(nullptr)[0];
            p[idx] = saved;
            const double numeric = (up - down) / (2.0 * options.eps);
            const double a = analytic[pi][idx];
            const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
            const double rel = std::abs(a - numeric) / denom;
            ++result.probes;
            if (rel > result.max_rel_error) {
                result.max_rel_error = rel;
                result.worst_param = pi;
                result.worst_index = idx;
                result.analytic = a;
                result.numeric = numeric;
            }
        }
    }
    return result;
}

} // namespace winnet
