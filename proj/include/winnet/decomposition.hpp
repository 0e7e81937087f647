#pragma once

#include "winnet/tensor.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace winnet {

/**
 * Batch of per-channel n x n grids, shape [B, C, n, n].
 *
 * Cell (i, j) holds element i*n + j of the mapped sequence, so rows run in
 * chronological order and columns stride by n time steps.
 */
struct WindowGrid {
    Tensor values;

    WindowGrid() = default;
    explicit WindowGrid(Tensor t);

    std::size_t n() const { return values.dim(2); }
    std::size_t batch() const { return values.dim(0); }
    std::size_t channels() const { return values.dim(1); }
};

struct DecompPair {
    Tensor trend;
    Tensor seasonal;
};

enum class PadMode { trend, zero };

/**
 * Source index, within one n x n plane, for every cell of the padded
 * (n+2q) x (n+2q) plane.
 *
 * Left/right pads continue the flattened sequence into the neighbouring
 * rows and fall back to the row's edge cell at the sequence ends. Top and
 * bottom pads repeat the first and last rows; corners repeat the nearest
 * corner cell.
 */
std::vector<std::int64_t> trend_padding_plane_index(std::size_t n, std::size_t q);

Tensor trend_padding(Tape* tape, const WindowGrid& grid, std::size_t q);

/// Pads by (k-1)/2, average-pools back to n x n; seasonal = grid - trend.
DecompPair tdd_decompose(Tape* tape, const WindowGrid& grid, std::size_t k,
                         PadMode pad = PadMode::trend);

/// Centred moving average along the last axis with edge replication.
DecompPair moving_avg_decompose_1d(Tape* tape, const Tensor& series, std::size_t k);

/// Plain-vector variant used by the analysis commands.
void moving_avg_1d(std::span<const double> series, std::size_t k, std::vector<double>& trend,
                   std::vector<double>& seasonal);

/**
 * TDD applied to a raw series: consecutive n*n blocks are folded into grids
 * and decomposed independently. A trailing partial block is covered by one
 * extra grid aligned to the end of the series. Needs at least n*n samples.
 */
void tdd_series(std::span<const double> series, std::size_t n, std::size_t k, PadMode pad,
                std::vector<double>& trend, std::vector<double>& seasonal);

struct LagPoint {
    std::size_t lag = 0;
    double r = 0.0;
    bool degenerate = false;
};

/// Pearson r; zero-variance inputs give 0 and set `degenerate`.
double pearson(std::span<const double> a, std::span<const double> b, bool* degenerate = nullptr);

/// r(lag) = corr(a[0 .. L-lag), b[lag .. L)) for lag = 0 .. max_lag.
std::vector<LagPoint> lagged_correlation(std::span<const double> a, std::span<const double> b,
                                         std::size_t max_lag);

} // namespace winnet
