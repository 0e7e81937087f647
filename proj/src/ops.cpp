#include "winnet/ops.hpp"

#include "winnet/error.hpp"

#include <Eigen/Core>

#include <cmath>

namespace winnet {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shapes " + shape_str(a.shape()) + " and " +
                             shape_str(b.shape()) + " differ");
    }
}

void require_rank(const Tensor& x, std::size_t rank, const char* op, const char* name) {
    if (x.rank() != rank) {
        throw DimensionError(std::string(op) + ": " + name + " must have rank " +
                             std::to_string(rank) + ", got " + shape_str(x.shape()));
    }
}

} // namespace

Tensor linear(Tape* tape, const Tensor& x, const Tensor& weight, const Tensor& bias) {
    require_rank(weight, 2, "linear", "weight");
    require_rank(bias, 1, "linear", "bias");
    const std::size_t dout = weight.dim(0);
    const std::size_t din = weight.dim(1);
    if (x.shape().back() != din) {
        throw DimensionError("linear: input last axis (" + std::to_string(x.shape().back()) +
                             ") does not match weight axis 1 (" + std::to_string(din) + ")");
    }
    if (bias.dim(0) != dout) {
        throw DimensionError("linear: bias axis 0 (" + std::to_string(bias.dim(0)) +
                             ") does not match weight axis 0 (" + std::to_string(dout) + ")");
    }
    const std::size_t rows = x.numel() / din;
    Shape out_shape = x.shape();
    out_shape.back() = dout;
    Tensor out(out_shape);

    ConstMapMat X(x.data().data(), rows, din);
    ConstMapMat W(weight.data().data(), dout, din);
    Eigen::Map<const Eigen::RowVectorXd> b(bias.data().data(), dout);
    MapMat Y(out.data().data(), rows, dout);
    Y.noalias() = X * W.transpose();
    Y.rowwise() += b;

    if (Tape::tracks(tape, {&x, &weight, &bias})) {
        tape->record("linear", {x, weight, bias}, out, [x, weight, bias, out, rows, din, dout]() mutable {
            ConstMapMat G(out.grad().data(), rows, dout);
            if (x.requires_grad()) {
                MapMat GX(x.grad().data(), rows, din);
                GX.noalias() += G * ConstMapMat(weight.data().data(), dout, din);
            }
            if (weight.requires_grad()) {
                MapMat GW(weight.grad().data(), dout, din);
                GW.noalias() += G.transpose() * ConstMapMat(x.data().data(), rows, din);
            }
            if (bias.requires_grad()) {
                Eigen::Map<Eigen::RowVectorXd> GB(bias.grad().data(), dout);
                GB += G.colwise().sum();
            }
        });
    }
    return out;
}

Tensor conv2d(Tape* tape, const Tensor& x, const Tensor& kernel, const Tensor& bias) {
    require_rank(x, 4, "conv2d", "input");
    require_rank(kernel, 4, "conv2d", "kernel");
    const std::size_t k = kernel.dim(2);
    if (k % 2 == 0) throw ConfigError("conv2d: kernel extent must be odd, got " + std::to_string(k));
    if (kernel.dim(3) != k || kernel.dim(0) != 1) {
        throw DimensionError("conv2d: kernel must be [1, Cin, k, k], got " + shape_str(kernel.shape()));
    }
    const std::size_t B = x.dim(0), Cin = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (kernel.dim(1) != Cin) {
        throw DimensionError("conv2d: kernel axis 1 (" + std::to_string(kernel.dim(1)) +
                             ") does not match input channels (" + std::to_string(Cin) + ")");
    }
    if (H < k || W < k) {
        throw ConfigError("conv2d: spatial extent " + std::to_string(std::min(H, W)) +
                          " smaller than kernel " + std::to_string(k));
    }
    if (bias.numel() != 1) throw DimensionError("conv2d: bias must hold one value");

    const auto q = static_cast<std::ptrdiff_t>(k / 2);
    const auto sH = static_cast<std::ptrdiff_t>(H), sW = static_cast<std::ptrdiff_t>(W);
    Tensor out(Shape{B, 1, H, W});
    auto xd = x.data();
    auto kd = kernel.data();
    auto od = out.data();
    for (std::size_t b = 0; b < B; ++b) {
        for (std::ptrdiff_t i = 0; i < sH; ++i) {
            for (std::ptrdiff_t j = 0; j < sW; ++j) {
                double acc = bias[0];
                for (std::size_t c = 0; c < Cin; ++c) {
                    const double* xc = xd.data() + (b * Cin + c) * H * W;
                    const double* kc = kd.data() + c * k * k;
                    for (std::ptrdiff_t u = -q; u <= q; ++u) {
                        const std::ptrdiff_t r = i + u;
                        if (r < 0 || r >= sH) continue;
                        for (std::ptrdiff_t v = -q; v <= q; ++v) {
                            const std::ptrdiff_t s = j + v;
                            if (s < 0 || s >= sW) continue;
                            acc += xc[r * sW + s] * kc[(u + q) * static_cast<std::ptrdiff_t>(k) + (v + q)];
                        }
                    }
                }
                od[(b * H + static_cast<std::size_t>(i)) * W + static_cast<std::size_t>(j)] = acc;
            }
        }
    }

    if (Tape::tracks(tape, {&x, &kernel, &bias})) {
        tape->record("conv2d", {x, kernel, bias}, out, [=]() mutable {
            auto g = out.grad();
            const bool gx = x.requires_grad(), gk = kernel.requires_grad(), gb = bias.requires_grad();
            std::span<double> xg = gx ? x.grad() : std::span<double>{};
            std::span<double> kg = gk ? kernel.grad() : std::span<double>{};
            auto xv = x.data();
            auto kv = kernel.data();
            double bias_acc = 0.0;
            for (std::size_t b = 0; b < B; ++b) {
                for (std::ptrdiff_t i = 0; i < sH; ++i) {
                    for (std::ptrdiff_t j = 0; j < sW; ++j) {
                        const double go = g[(b * H + static_cast<std::size_t>(i)) * W + static_cast<std::size_t>(j)];
                        if (go == 0.0) continue;
                        bias_acc += go;
                        for (std::size_t c = 0; c < Cin; ++c) {
                            const std::size_t xoff = (b * Cin + c) * H * W;
                            const std::size_t koff = c * k * k;
                            for (std::ptrdiff_t u = -q; u <= q; ++u) {
                                const std::ptrdiff_t r = i + u;
                                if (r < 0 || r >= sH) continue;
                                for (std::ptrdiff_t v = -q; v <= q; ++v) {
                                    const std::ptrdiff_t s = j + v;
                                    if (s < 0 || s >= sW) continue;
                                    const std::size_t xi = xoff + static_cast<std::size_t>(r * sW + s);
                                    const std::size_t ki = koff + static_cast<std::size_t>((u + q) * static_cast<std::ptrdiff_t>(k) + (v + q));
                                    if (gx) xg[xi] += go * kv[ki];
                                    if (gk) kg[ki] += go * xv[xi];
                                }
                            }
                        }
                    }
                }
            }
            if (gb) bias.grad()[0] += bias_acc;
        });
    }
    return out;
}

Tensor avgpool2d(Tape* tape, const Tensor& x, std::size_t k) {
    require_rank(x, 4, "avgpool2d", "input");
    const std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (k == 0 || H < k || W < k) {
        throw ConfigError("avgpool2d: window " + std::to_string(k) + " does not fit " +
                          std::to_string(H) + "x" + std::to_string(W));
    }
    const std::size_t oh = H - k + 1, ow = W - k + 1;
    const double inv = 1.0 / static_cast<double>(k * k);
    Tensor out(Shape{B, C, oh, ow});
    auto xd = x.data();
    auto od = out.data();
    for (std::size_t p = 0; p < B * C; ++p) {
        const double* xp = xd.data() + p * H * W;
        double* op = od.data() + p * oh * ow;
        for (std::size_t i = 0; i < oh; ++i) {
            for (std::size_t j = 0; j < ow; ++j) {
                double acc = 0.0;
                for (std::size_t u = 0; u < k; ++u) {
                    for (std::size_t v = 0; v < k; ++v) acc += xp[(i + u) * W + (j + v)];
                }
                op[i * ow + j] = acc * inv;
            }
        }
    }
    if (Tape::tracks(tape, {&x})) {
        tape->record("avgpool2d", {x}, out, [=]() mutable {
            auto g = out.grad();
            auto xg = x.grad();
            for (std::size_t p = 0; p < B * C; ++p) {
                for (std::size_t i = 0; i < oh; ++i) {
                    for (std::size_t j = 0; j < ow; ++j) {
                        const double share = g[p * oh * ow + i * ow + j] * inv;
                        for (std::size_t u = 0; u < k; ++u) {
                            for (std::size_t v = 0; v < k; ++v) xg[p * H * W + (i + u) * W + (j + v)] += share;
                        }
                    }
                }
            }
        });
    }
    return out;
}

Tensor activation(Tape* tape, const Tensor& x, Activation kind) {
    Tensor out(x.shape());
    auto xd = x.data();
    auto od = out.data();
    if (kind == Activation::relu) {
        for (std::size_t i = 0; i < xd.size(); ++i) od[i] = xd[i] > 0.0 ? xd[i] : 0.0;
    } else {
        for (std::size_t i = 0; i < xd.size(); ++i) od[i] = 1.0 / (1.0 + std::exp(-xd[i]));
    }
    if (Tape::tracks(tape, {&x})) {
        tape->record(kind == Activation::relu ? "relu" : "sigmoid", {x}, out, [x, out, kind]() mutable {
            auto g = out.grad();
            auto xg = x.grad();
            auto xv = x.data();
            auto ov = out.data();
            if (kind == Activation::relu) {
                for (std::size_t i = 0; i < g.size(); ++i) xg[i] += xv[i] > 0.0 ? g[i] : 0.0;
            } else {
                for (std::size_t i = 0; i < g.size(); ++i) xg[i] += g[i] * ov[i] * (1.0 - ov[i]);
            }
        });
    }
    return out;
}

Tensor dropout(Tape* tape, const Tensor& x, double rate, bool training, Rng& rng) {
    if (!(rate >= 0.0 && rate < 1.0)) {
        throw ConfigError("dropout: rate must lie in [0, 1), got " + std::to_string(rate));
    }
    if (!training || rate == 0.0) return x;
    const double keep_scale = 1.0 / (1.0 - rate);
    std::vector<double> mask(x.numel());
    for (auto& m : mask) {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        m = u < rate ? 0.0 : keep_scale;
    }
    Tensor out(x.shape());
    auto xd = x.data();
    auto od = out.data();
    for (std::size_t i = 0; i < mask.size(); ++i) od[i] = xd[i] * mask[i];
    if (Tape::tracks(tape, {&x})) {
        tape->record("dropout", {x}, out, [x, out, mask = std::move(mask)]() mutable {
            auto g = out.grad();
            auto xg = x.grad();
            for (std::size_t i = 0; i < g.size(); ++i) xg[i] += g[i] * mask[i];
        });
    }
    return out;
}

namespace {

Tensor add_scaled(Tape* tape, const Tensor& a, const Tensor& b, double sign, const char* name) {
    require_same_shape(a, b, name);
    Tensor out(a.shape());
    auto ad = a.data();
    auto bd = b.data();
    auto od = out.data();
    for (std::size_t i = 0; i < od.size(); ++i) od[i] = ad[i] + sign * bd[i];
    if (Tape::tracks(tape, {&a, &b})) {
        tape->record(name, {a, b}, out, [a, b, out, sign]() mutable {
            auto g = out.grad();
            if (a.requires_grad()) {
                auto ag = a.grad();
                for (std::size_t i = 0; i < g.size(); ++i) ag[i] += g[i];
            }
            if (b.requires_grad()) {
                auto bg = b.grad();
                for (std::size_t i = 0; i < g.size(); ++i) bg[i] += sign * g[i];
            }
        });
    }
    return out;
}

} // namespace

Tensor add(Tape* tape, const Tensor& a, const Tensor& b) { return add_scaled(tape, a, b, 1.0, "add"); }
Tensor sub(Tape* tape, const Tensor& a, const Tensor& b) { return add_scaled(tape, a, b, -1.0, "sub"); }

Tensor gather(Tape* tape, const Tensor& x, Shape out_shape, std::vector<std::int64_t> index,
              std::string op_name) {
    if (shape_numel(out_shape) != index.size()) {
        throw DimensionError("gather: index map holds " + std::to_string(index.size()) +
                             " entries for output shape " + shape_str(out_shape));
    }
    const auto n_in = static_cast<std::int64_t>(x.numel());
    Tensor out(std::move(out_shape));
    auto xd = x.data();
    auto od = out.data();
    for (std::size_t i = 0; i < index.size(); ++i) {
        const std::int64_t src = index[i];
        if (src >= n_in) throw DimensionError("gather: source index out of range");
        od[i] = src < 0 ? 0.0 : xd[static_cast<std::size_t>(src)];
    }
    if (Tape::tracks(tape, {&x})) {
        tape->record(std::move(op_name), {x}, out, [x, out, index = std::move(index)]() mutable {
            auto g = out.grad();
            auto xg = x.grad();
            for (std::size_t i = 0; i < index.size(); ++i) {
                if (index[i] >= 0) xg[static_cast<std::size_t>(index[i])] += g[i];
            }
        });
    }
    return out;
}

Tensor reshape(Tape* tape, const Tensor& x, Shape shape) {
    if (shape_numel(shape) != x.numel()) {
        throw DimensionError("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
    }
    std::vector<std::int64_t> index(x.numel());
    for (std::size_t i = 0; i < index.size(); ++i) index[i] = static_cast<std::int64_t>(i);
    return gather(tape, x, std::move(shape), std::move(index), "reshape");
}

Tensor transpose_last2(Tape* tape, const Tensor& x) {
    if (x.rank() < 2) throw DimensionError("transpose: rank must be at least 2");
    const std::size_t r = x.shape()[x.rank() - 2], c = x.shape().back();
    const std::size_t outer = x.numel() / (r * c);
    Shape out_shape = x.shape();
    std::swap(out_shape[x.rank() - 2], out_shape[x.rank() - 1]);
    std::vector<std::int64_t> index(x.numel());
    for (std::size_t p = 0; p < outer; ++p) {
        for (std::size_t i = 0; i < c; ++i) {
            for (std::size_t j = 0; j < r; ++j) {
                index[p * r * c + i * r + j] = static_cast<std::int64_t>(p * r * c + j * c + i);
            }
        }
    }
    return gather(tape, x, std::move(out_shape), std::move(index), "transpose");
}

Tensor permute_021(Tape* tape, const Tensor& x) {
    require_rank(x, 3, "permute", "input");
    return transpose_last2(tape, x);
}

Tensor zero_pad2d(Tape* tape, const Tensor& x, std::size_t q) {
    require_rank(x, 4, "zero_pad2d", "input");
    const std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const std::size_t ph = H + 2 * q, pw = W + 2 * q;
    std::vector<std::int64_t> index(B * C * ph * pw, -1);
    for (std::size_t p = 0; p < B * C; ++p) {
        for (std::size_t i = 0; i < H; ++i) {
            for (std::size_t j = 0; j < W; ++j) {
                index[p * ph * pw + (i + q) * pw + (j + q)] = static_cast<std::int64_t>(p * H * W + i * W + j);
            }
        }
    }
    return gather(tape, x, Shape{B, C, ph, pw}, std::move(index), "zero_pad2d");
}

Tensor stack_pair(Tape* tape, const Tensor& a, const Tensor& b) {
    require_rank(a, 4, "stack_pair", "first input");
    require_same_shape(a, b, "stack_pair");
    const std::size_t B = a.dim(0), C = a.dim(1), H = a.dim(2), W = a.dim(3);
    const std::size_t plane = H * W;
    Tensor out(Shape{B * C, 2, H, W});
    auto ad = a.data();
    auto bd = b.data();
    auto od = out.data();
    for (std::size_t p = 0; p < B * C; ++p) {
        std::copy_n(ad.data() + p * plane, plane, od.data() + (2 * p) * plane);
        std::copy_n(bd.data() + p * plane, plane, od.data() + (2 * p + 1) * plane);
    }
    if (Tape::tracks(tape, {&a, &b})) {
        tape->record("stack_pair", {a, b}, out, [a, b, out, plane]() mutable {
            auto g = out.grad();
            const std::size_t pairs = a.numel() / plane;
            if (a.requires_grad()) {
                auto ag = a.grad();
                for (std::size_t p = 0; p < pairs; ++p)
                    for (std::size_t e = 0; e < plane; ++e) ag[p * plane + e] += g[(2 * p) * plane + e];
            }
            if (b.requires_grad()) {
                auto bg = b.grad();
                for (std::size_t p = 0; p < pairs; ++p)
                    for (std::size_t e = 0; e < plane; ++e) bg[p * plane + e] += g[(2 * p + 1) * plane + e];
            }
        });
    }
    return out;
}

Tensor sum(Tape* tape, const Tensor& x) {
    double acc = 0.0;
    for (double v : x.data()) acc += v;
    Tensor out = Tensor::scalar(acc);
    if (Tape::tracks(tape, {&x})) {
        tape->record("sum", {x}, out, [x, out]() mutable {
            const double g = out.grad()[0];
            for (double& v : x.grad()) v += g;
        });
    }
    return out;
}

Tensor weighted_sum(Tape* tape, const Tensor& x, const Tensor& w) {
    if (w.numel() != x.numel()) throw DimensionError("weighted_sum: weight size mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < x.numel(); ++i) acc += x[i] * w[i];
    Tensor out = Tensor::scalar(acc);
    if (Tape::tracks(tape, {&x})) {
        tape->record("weighted_sum", {x}, out, [x, w, out]() mutable {
            const double g = out.grad()[0];
            auto xg = x.grad();
            for (std::size_t i = 0; i < xg.size(); ++i) xg[i] += g * w[i];
        });
    }
    return out;
}

Tensor mse_loss(Tape* tape, const Tensor& pred, const Tensor& target) {
    require_same_shape(pred, target, "mse_loss");
    const double inv_n = 1.0 / static_cast<double>(pred.numel());
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.numel(); ++i) {
        const double d = pred[i] - target[i];
        acc += d * d;
    }
    Tensor out = Tensor::scalar(acc * inv_n);
    if (Tape::tracks(tape, {&pred})) {
        tape->record("mse_loss", {pred}, out, [pred, target, out, inv_n]() mutable {
            const double g = out.grad()[0];
            auto pg = pred.grad();
            for (std::size_t i = 0; i < pg.size(); ++i) pg[i] += 2.0 * inv_n * g * (pred[i] - target[i]);
        });
    }
    return out;
}

} // namespace winnet
