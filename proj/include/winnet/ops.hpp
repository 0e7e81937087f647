#pragma once

#include "winnet/tensor.hpp"

#include <cstdint>
#include <random>

namespace winnet {

using Rng = std::mt19937_64;

enum class Activation { relu, sigmoid };

// Every op takes an optional tape. With a null tape, or when no input
// requires a gradient, nothing is recorded.

/// out[..., o] = sum_i x[..., i] * weight[o, i] + bias[o]
Tensor linear(Tape* tape, const Tensor& x, const Tensor& weight, const Tensor& bias);

/// Cross-correlation over [B, Cin, H, W] with a [1, Cin, k, k] kernel,
/// zero padding (k-1)/2 per side and stride 1. Output is [B, 1, H, W].
Tensor conv2d(Tape* tape, const Tensor& x, const Tensor& kernel, const Tensor& bias);

/// Mean of each k x k block, stride 1, no padding.
Tensor avgpool2d(Tape* tape, const Tensor& x, std::size_t k);

Tensor activation(Tape* tape, const Tensor& x, Activation kind);
inline Tensor relu(Tape* tape, const Tensor& x) { return activation(tape, x, Activation::relu); }
inline Tensor sigmoid(Tape* tape, const Tensor& x) { return activation(tape, x, Activation::sigmoid); }

/// Inverted dropout. Identity when not training or rate is zero.
Tensor dropout(Tape* tape, const Tensor& x, double rate, bool training, Rng& rng);

Tensor add(Tape* tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape* tape, const Tensor& a, const Tensor& b);

/**
 * out[i] = x[index[i]], or 0 where index[i] < 0.
 *
 * Backward scatters gradient back through the map. Reshape, transpose,
 * permute and every padding scheme are expressed as an index map.
 */
Tensor gather(Tape* tape, const Tensor& x, Shape out_shape, std::vector<std::int64_t> index,
              std::string op_name = "gather");

Tensor reshape(Tape* tape, const Tensor& x, Shape shape);
/// Swap the last two axes.
Tensor transpose_last2(Tape* tape, const Tensor& x);
/// [B, A1, A2] -> [B, A2, A1]
Tensor permute_021(Tape* tape, const Tensor& x);
/// Zero-pad the last two axes by q cells per side.
Tensor zero_pad2d(Tape* tape, const Tensor& x, std::size_t q);

/// [B, C, H, W] x 2 -> [B*C, 2, H, W]: channel `c` of `a` and `b` side by side.
Tensor stack_pair(Tape* tape, const Tensor& a, const Tensor& b);

Tensor sum(Tape* tape, const Tensor& x);
/// sum(x * w) for a constant weight tensor of the same size.
Tensor weighted_sum(Tape* tape, const Tensor& x, const Tensor& w);
Tensor mse_loss(Tape* tape, const Tensor& pred, const Tensor& target);

} // namespace winnet
