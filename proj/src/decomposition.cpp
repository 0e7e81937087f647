#include "winnet/decomposition.hpp"

#include "winnet/error.hpp"
#include "winnet/ops.hpp"

#include <algorithm>
#include <cmath>

namespace winnet {

WindowGrid::WindowGrid(Tensor t) : values(std::move(t)) {
    if (values.rank() != 4 || values.dim(2) != values.dim(3)) {
        throw DimensionError("window grid must be [B, C, n, n], got " + shape_str(values.shape()));
    }
    if (values.dim(2) < 2) throw ConfigError("window grid needs n >= 2");
}

std::vector<std::int64_t> trend_padding_plane_index(std::size_t n, std::size_t q) {
    if (q == 0 || q >= n) {
        throw ConfigError("trend padding needs 1 <= q < n, got q=" + std::to_string(q) +
                          " n=" + std::to_string(n));
    }
    const auto sn = static_cast<std::int64_t>(n);
    const auto sq = static_cast<std::int64_t>(q);
    const std::int64_t side = sn + 2 * sq;
    const std::int64_t flat_len = sn * sn;
    std::vector<std::int64_t> index(static_cast<std::size_t>(side * side));
    for (std::int64_t pi = 0; pi < side; ++pi) {
        const std::int64_t i = pi - sq;
        for (std::int64_t pj = 0; pj < side; ++pj) {
            const std::int64_t j = pj - sq;
            const bool row_out = i < 0 || i >= sn;
            const bool col_out = j < 0 || j >= sn;
            const std::int64_t ci = std::clamp<std::int64_t>(i, 0, sn - 1);
            const std::int64_t cj = std::clamp<std::int64_t>(j, 0, sn - 1);
            std::int64_t src;
            if (row_out) {
                // Above/below the grid, and the corners.
                src = ci * sn + cj;
            } else if (col_out) {
                const std::int64_t flat = i * sn + j;
                src = (flat < 0 || flat >= flat_len) ? i * sn + cj : flat;
            } else {
                src = i * sn + j;
            }
            index[static_cast<std::size_t>(pi * side + pj)] = src;
        }
    }
    return index;
}

Tensor trend_padding(Tape* tape, const WindowGrid& grid, std::size_t q) {
    const std::size_t n = grid.n();
    const std::size_t planes = grid.batch() * grid.channels();
    const auto plane_index = trend_padding_plane_index(n, q);
    const std::size_t side = n + 2 * q;
    std::vector<std::int64_t> index;
    index.reserve(planes * plane_index.size());
    for (std::size_t p = 0; p < planes; ++p) {
        const auto base = static_cast<std::int64_t>(p * n * n);
        for (auto src : plane_index) index.push_back(base + src);
    }
    return gather(tape, grid.values, Shape{grid.batch(), grid.channels(), side, side}, std::move(index),
                  "trend_padding");
}

DecompPair tdd_decompose(Tape* tape, const WindowGrid& grid, std::size_t k, PadMode pad) {
    if (k % 2 == 0 || k < 3) {
        throw ConfigError("decomposition pooling window must be odd and >= 3, got " + std::to_string(k));
    }
    const std::size_t q = (k - 1) / 2;
    Tensor padded = pad == PadMode::trend ? trend_padding(tape, grid, q) : zero_pad2d(tape, grid.values, q);
    Tensor trend = avgpool2d(tape, padded, k);
    Tensor seasonal = sub(tape, grid.values, trend);
    return {trend, seasonal};
}

DecompPair moving_avg_decompose_1d(Tape* tape, const Tensor& series, std::size_t k) {
    if (k % 2 == 0) throw ConfigError("moving average window must be odd, got " + std::to_string(k));
    const std::size_t L = series.shape().back();
    const std::size_t rows = series.numel() / L;
    const auto q = static_cast<std::ptrdiff_t>(k / 2);
    const auto sL = static_cast<std::ptrdiff_t>(L);
    const double inv = 1.0 / static_cast<double>(k);
    Tensor trend(series.shape());
    auto xd = series.data();
    auto td = trend.data();
    for (std::size_t r = 0; r < rows; ++r) {
        const double* x = xd.data() + r * L;
        for (std::ptrdiff_t t = 0; t < sL; ++t) {
            double acc = 0.0;
            for (std::ptrdiff_t u = t - q; u <= t + q; ++u) acc += x[std::clamp<std::ptrdiff_t>(u, 0, sL - 1)];
            td[r * L + static_cast<std::size_t>(t)] = acc * inv;
        }
    }
    if (Tape::tracks(tape, {&series})) {
        tape->record("moving_avg_1d", {series}, trend, [series, trend, rows, L, q, sL, inv]() mutable {
            auto g = trend.grad();
            auto xg = series.grad();
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::ptrdiff_t t = 0; t < sL; ++t) {
                    const double share = g[r * L + static_cast<std::size_t>(t)] * inv;
                    for (std::ptrdiff_t u = t - q; u <= t + q; ++u)
                        xg[r * L + static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(u, 0, sL - 1))] += share;
                }
            }
        });
    }
    Tensor seasonal = sub(tape, series, trend);
    return {trend, seasonal};
}

void moving_avg_1d(std::span<const double> series, std::size_t k, std::vector<double>& trend,
                   std::vector<double>& seasonal) {
    if (series.empty()) throw InputError("moving average of an empty series");
    Tensor t(Shape{series.size()}, std::vector<double>(series.begin(), series.end()));
    auto pair = moving_avg_decompose_1d(nullptr, t, k);
    trend.assign(pair.trend.data().begin(), pair.trend.data().end());
    seasonal.assign(pair.seasonal.data().begin(), pair.seasonal.data().end());
}

void tdd_series(std::span<const double> series, std::size_t n, std::size_t k, PadMode pad,
                std::vector<double>& trend, std::vector<double>& seasonal) {
    const std::size_t len = n * n;
    if (n < 2 || series.size() < len) {
        throw InputError("tdd_series: need at least n*n = " + std::to_string(len) + " samples, got " +
                         std::to_string(series.size()));
    }
    std::vector<std::size_t> starts;
    for (std::size_t s = 0; s + len <= series.size(); s += len) starts.push_back(s);
    if (series.size() % len != 0) starts.push_back(series.size() - len);

    Tensor blocks(Shape{starts.size(), 1, n, n});
    for (std::size_t b = 0; b < starts.size(); ++b) {
        std::copy_n(series.begin() + static_cast<std::ptrdiff_t>(starts[b]), len,
                    blocks.data().begin() + static_cast<std::ptrdiff_t>(b * len));
    }
    DecompPair pair = tdd_decompose(nullptr, WindowGrid(blocks), k, pad);
    trend.assign(series.size(), 0.0);
    seasonal.assign(series.size(), 0.0);
    std::size_t covered = 0;
    for (std::size_t b = 0; b < starts.size(); ++b) {
        for (std::size_t i = covered - std::min(covered, starts[b]); i < len; ++i) {
            trend[starts[b] + i] = pair.trend[b * len + i];
            seasonal[starts[b] + i] = pair.seasonal[b * len + i];
        }
        covered = starts[b] + len;
    }
}

double pearson(std::span<const double> a, std::span<const double> b, bool* degenerate) {
    if (a.size() != b.size() || a.empty()) throw DimensionError("pearson: inputs must be equal, nonempty");
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    const bool flat = saa <= 0.0 || sbb <= 0.0;
    if (degenerate) *degenerate = flat;
    if (flat) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

std::vector<LagPoint> lagged_correlation(std::span<const double> a, std::span<const double> b,
                                         std::size_t max_lag) {
    if (a.size() != b.size()) throw DimensionError("lagged_correlation: series lengths differ");
    if (a.size() <= max_lag + 2) {
        throw ConfigError("lagged_correlation: length " + std::to_string(a.size()) +
                          " too short for max lag " + std::to_string(max_lag));
    }
    std::vector<LagPoint> out;
    out.reserve(max_lag + 1);
    const std::size_t L = a.size();
    for (std::size_t lag = 0; lag <= max_lag; ++lag) {
        LagPoint p;
        p.lag = lag;
        p.r = pearson(a.subspan(0, L - lag), b.subspan(lag, L - lag), &p.degenerate);
        out.push_back(p);
    }
    return out;
}

} // namespace winnet
