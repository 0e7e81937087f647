#pragma once

#include "winnet/grad_check.hpp"
#include "winnet/ops.hpp"
#include "winnet/tensor.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <random>
#include <unistd.h>
#include <vector>

namespace testutil {

using winnet::Shape;
using winnet::Tape;
using winnet::Tensor;

inline Tensor random_tensor(Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    Tensor t(std::move(shape));
    for (auto& v : t.data()) v = u(rng);
    return t;
}

inline Tensor param(Shape shape, std::uint64_t seed) {
    Tensor t = random_tensor(std::move(shape), seed);
    t.set_requires_grad(true);
    return t;
}

/// Scalar probe <w, f(x)> with fixed random w, so every output coordinate matters.
inline Tensor probe(Tape* tape, const Tensor& y, std::uint64_t seed = 99) {
    return winnet::weighted_sum(tape, y, random_tensor(y.shape(), seed));
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// Naive cross-correlation with zero same-padding.
inline std::vector<double> conv_oracle(const Tensor& x, const Tensor& k, double bias) {
    const std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3), K = k.dim(2);
    const long q = static_cast<long>(K / 2);
    std::vector<double> out(B * H * W, 0.0);
    for (std::size_t b = 0; b < B; ++b)
        for (long i = 0; i < static_cast<long>(H); ++i)
            for (long j = 0; j < static_cast<long>(W); ++j) {
                double acc = bias;
                for (std::size_t c = 0; c < C; ++c)
                    for (long u = 0; u < static_cast<long>(K); ++u)
                        for (long v = 0; v < static_cast<long>(K); ++v) {
                            const long r = i + u - q, s = j + v - q;
                            if (r < 0 || s < 0 || r >= static_cast<long>(H) || s >= static_cast<long>(W)) continue;
                            acc += k[(c * K + u) * K + v] * x[((b * C + c) * H + r) * W + s];
                        }
                out[(b * H + i) * W + j] = acc;
            }
    return out;
}

/// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("winnet_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

    std::filesystem::path write(const std::string& name, const std::string& text) const {
        std::ofstream(path_ / name) << text;
        return path_ / name;
    }

private:
    std::filesystem::path path_;
};

} // namespace testutil
