#include "helpers.hpp"

#include "winnet/error.hpp"

#include <doctest.h>

#include <cmath>

using namespace winnet;
using testutil::param;
using testutil::probe;
using testutil::random_tensor;

namespace {

std::vector<double> pool_oracle(const Tensor& x, std::size_t k) {
    const std::size_t P = x.dim(0) * x.dim(1), H = x.dim(2), W = x.dim(3);
    const std::size_t oh = H - k + 1, ow = W - k + 1;
    std::vector<double> out;
    for (std::size_t p = 0; p < P; ++p)
        for (std::size_t i = 0; i < oh; ++i)
            for (std::size_t j = 0; j < ow; ++j) {
                double acc = 0.0;
                for (std::size_t u = 0; u < k; ++u)
                    for (std::size_t v = 0; v < k; ++v) acc += x[(p * H + i + u) * W + j + v];
                out.push_back(acc / static_cast<double>(k * k));
            }
    return out;
}

} // namespace

TEST_SUITE("tensor") {

TEST_CASE("shape bookkeeping") {
    Tensor t(Shape{2, 3, 4}, 1.5);
    CHECK(t.numel() == 24);
    CHECK(t.rank() == 3);
    CHECK(t.dim(2) == 4);
    CHECK_FALSE(t.has_grad());
    CHECK(t.grad().size() == t.numel());
    CHECK_THROWS_AS(Tensor(Shape{2, 2}, std::vector<double>{1, 2, 3}), DimensionError);
    CHECK_THROWS_AS(Tensor(Shape{1, 1, 1, 1, 1}), DimensionError);
    Tensor c = t.clone();
    c[0] = 9.0;
    CHECK(t[0] == 1.5);
    CHECK_FALSE(c.same_storage(t));
}

TEST_CASE("linear examples") {
    Tensor x(Shape{1, 2}, {1, 0});
    Tensor eye(Shape{2, 2}, {1, 0, 0, 1});
    Tensor zero(Shape{2}, 0.0);
    Tensor y = linear(nullptr, x, eye, zero);
    CHECK(y[0] == 1.0);
    CHECK(y[1] == 0.0);

    Tensor y2 = linear(nullptr, Tensor(Shape{1, 2}, {1, 2}), Tensor(Shape{1, 2}, {3, 4}), Tensor(Shape{1}, {1}));
    CHECK(y2[0] == doctest::Approx(12.0));

    CHECK_THROWS_AS(linear(nullptr, Tensor(Shape{1, 3}), eye, zero), DimensionError);
}

TEST_CASE("linear gradient") {
    Tensor x = param({2, 3, 5}, 1);
    Tensor w = param({4, 5}, 2);
    Tensor b = param({4}, 3);
    auto r = grad_check([&](Tape* t) { return sum(t, linear(t, x, w, b)); }, {x, w, b});
    CHECK(r.max_rel_error < 1e-6);
    auto r2 = grad_check([&](Tape* t) { return probe(t, linear(t, x, w, b)); }, {x, w, b});
    CHECK(r2.max_rel_error < 1e-6);
}

TEST_CASE("conv2d examples") {
    Tensor k = random_tensor({1, 2, 3, 3}, 5);
    Tensor zero_bias(Shape{1}, 0.0);
    Tensor y = conv2d(nullptr, Tensor(Shape{2, 2, 4, 4}, 0.0), k, zero_bias);
    for (double v : y.data()) CHECK(v == 0.0);
    CHECK(y.shape() == Shape{2, 1, 4, 4});

    Tensor x = random_tensor({1, 2, 4, 4}, 6);
    Tensor k1(Shape{1, 2, 1, 1}, {0.5, -2.0});
    Tensor bias(Shape{1}, {0.25});
    Tensor y1 = conv2d(nullptr, x, k1, bias);
    for (std::size_t i = 0; i < 16; ++i) CHECK(y1[i] == doctest::Approx(0.5 * x[i] - 2.0 * x[16 + i] + 0.25));

    CHECK_THROWS_AS(conv2d(nullptr, x, Tensor(Shape{1, 2, 2, 2}), bias), ConfigError);
    CHECK_THROWS_AS(conv2d(nullptr, random_tensor({1, 2, 2, 2}, 1), k, bias), ConfigError);
}

TEST_CASE("conv2d matches loop oracle") {
    for (std::size_t n = 3; n <= 8; ++n) {
        for (std::size_t k : {1u, 3u}) {
            Tensor x = random_tensor({3, 2, n, n}, 10 + n);
            Tensor w = random_tensor({1, 2, k, k}, 20 + n);
            Tensor b = random_tensor({1}, 30 + n);
            const auto want = testutil::conv_oracle(x, w, b[0]);
            Tensor got = conv2d(nullptr, x, w, b);
            CHECK(testutil::max_abs_diff(got.data(), want) < 1e-12);
        }
    }
}

TEST_CASE("avgpool2d") {
    Tensor c(Shape{1, 1, 4, 4}, 3.25);
    Tensor pooled = avgpool2d(nullptr, c, 3);
    for (double v : pooled.data()) CHECK(v == doctest::Approx(3.25));
    Tensor small(Shape{1, 1, 2, 2}, {1, 2, 3, 4});
    Tensor p = avgpool2d(nullptr, small, 2);
    CHECK(p.shape() == Shape{1, 1, 1, 1});
    CHECK(p[0] == doctest::Approx(2.5));
    CHECK_THROWS_AS(avgpool2d(nullptr, small, 3), ConfigError);

    for (std::size_t n = 3; n <= 8; ++n) {
        Tensor x = random_tensor({2, 3, n, n}, 40 + n);
        CHECK(testutil::max_abs_diff(avgpool2d(nullptr, x, 3).data(), pool_oracle(x, 3)) < 1e-12);
    }
}

TEST_CASE("activations") {
    Tensor x(Shape{3}, {-1.0, 2.0, 0.0});
    Tensor r = relu(nullptr, x);
    CHECK(r[0] == 0.0);
    CHECK(r[1] == 2.0);
    CHECK(sigmoid(nullptr, x)[2] == 0.5);

    Tensor one(Shape{1}, {1.0});
    one.set_requires_grad(true);
    auto g = grad_check([&](Tape* t) { return sum(t, sigmoid(t, one)); }, {one});
    CHECK(g.max_rel_error < 1e-8);

    // Keep probes away from the relu kink.
    Tensor xs = random_tensor({4, 5}, 3);
    for (auto& v : xs.data()) v += v > 0 ? 0.1 : -0.1;
    xs.set_requires_grad(true);
    CHECK(grad_check([&](Tape* t) { return probe(t, relu(t, xs)); }, {xs}).max_rel_error < 1e-6);
    CHECK(grad_check([&](Tape* t) { return probe(t, sigmoid(t, xs)); }, {xs}).max_rel_error < 1e-6);
}

TEST_CASE("dropout") {
    Rng rng(1);
    Tensor x = random_tensor({100}, 4);
    Tensor same = dropout(nullptr, x, 0.5, false, rng);
    for (std::size_t i = 0; i < x.numel(); ++i) CHECK(same[i] == x[i]);
    Tensor zero_rate = dropout(nullptr, x, 0.0, true, rng);
    for (std::size_t i = 0; i < x.numel(); ++i) CHECK(zero_rate[i] == x[i]);
    CHECK_THROWS_AS(dropout(nullptr, x, 1.0, true, rng), ConfigError);
    CHECK_THROWS_AS(dropout(nullptr, x, -0.1, true, rng), ConfigError);

    Tensor ones(Shape{100000}, 1.0);
    Tensor d = dropout(nullptr, ones, 0.5, true, rng);
    double mean = 0.0;
    for (double v : d.data()) {
        CHECK((v == 0.0 || v == 2.0));
        mean += v;
    }
    mean /= 100000.0;
    CHECK(std::abs(mean - 1.0) < 0.02);

    Rng a(77), b(77);
    Tensor da = dropout(nullptr, ones, 0.3, true, a);
    Tensor db = dropout(nullptr, ones, 0.3, true, b);
    CHECK(std::equal(da.data().begin(), da.data().end(), db.data().begin()));
}

TEST_CASE("dropout gradient uses the mask") {
    Tensor x = param({50}, 8);
    Rng rng(3);
    Tape tape;
    Tensor y = dropout(&tape, x, 0.4, true, rng);
    backward(tape, sum(&tape, y));
    for (std::size_t i = 0; i < x.numel(); ++i) CHECK(x.grad()[i] == doctest::Approx(y[i] / x[i]));
}

TEST_CASE("backward basics") {
    Tensor x = param({2, 3}, 9);
    {
        Tape tape;
        backward(tape, sum(&tape, x));
        for (double g : x.grad()) CHECK(g == 1.0);
    }
    x.zero_grad();
    {
        Tape tape;
        Tensor loss = weighted_sum(&tape, x, x.clone());
        backward(tape, loss);
        // <x, x0> has gradient x0; sum(x^2)/2 has gradient x.
        for (std::size_t i = 0; i < x.numel(); ++i) CHECK(x.grad()[i] == doctest::Approx(x[i]));
    }
    x.zero_grad();
    {
        Tape tape;
        Tensor sq = mse_loss(&tape, x, Tensor(x.shape(), 0.0));  // mean(x^2)
        backward(tape, sq);
        for (std::size_t i = 0; i < x.numel(); ++i) CHECK(x.grad()[i] == doctest::Approx(2.0 * x[i] / 6.0));
    }
}

TEST_CASE("fan-out accumulates") {
    Tensor x = param({4}, 11);
    Tape tape;
    Tensor y = add(&tape, x, x);
    backward(tape, sum(&tape, add(&tape, y, x)));
    for (double g : x.grad()) CHECK(g == 3.0);
}

TEST_CASE("backward errors") {
    Tensor x = param({3}, 12);
    Tape tape;
    Tensor y = add(&tape, x, x);
    CHECK_THROWS_AS(backward(tape, y), UsageError);
    Tape other;
    CHECK_THROWS_AS(backward(other, Tensor::scalar(1.0)), UsageError);
}

TEST_CASE("untracked ops record nothing") {
    Tape tape;
    Tensor a = random_tensor({3}, 1), b = random_tensor({3}, 2);
    add(&tape, a, b);
    CHECK(tape.size() == 0);
    Tensor p = param({3}, 3);
    add(&tape, a, p);
    CHECK(tape.size() == 1);
}

TEST_CASE("tape is topologically ordered") {
    Tensor x = param({1, 2, 4, 4}, 13);
    Tensor w = param({1, 2, 3, 3}, 14);
    Tensor b = param({1}, 15);
    Tape tape;
    Tensor y = avgpool2d(&tape, sigmoid(&tape, conv2d(&tape, x, w, b)), 3);
    sum(&tape, y);
    const auto& nodes = tape.nodes();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        for (const auto& in : nodes[i].inputs) {
            for (std::size_t j = i; j < nodes.size(); ++j) CHECK_FALSE(nodes[j].output.same_storage(in));
        }
    }
}

TEST_CASE("backward twice gives identical gradients") {
    Tensor x = param({2, 2, 5, 5}, 16);
    Tensor w = param({1, 2, 3, 3}, 17);
    Tensor b = param({1}, 18);
    Tape tape;
    Tensor loss = probe(&tape, avgpool2d(&tape, relu(&tape, conv2d(&tape, x, w, b)), 3));
    backward(tape, loss);
    const std::vector<double> first(w.grad().begin(), w.grad().end());
    w.zero_grad();
    x.zero_grad();
    b.zero_grad();
    backward(tape, loss);
    CHECK(std::equal(first.begin(), first.end(), w.grad().begin()));
}

TEST_CASE("grad_check self tests") {
    Tensor x = param({6}, 19);
    auto id = grad_check([&](Tape* t) { return sum(t, reshape(t, x, {2, 3})); }, {x});
    CHECK(id.max_rel_error < 1e-10);

    // conv2d + avgpool stack.
    Tensor img = param({2, 2, 6, 6}, 20);
    Tensor w = param({1, 2, 3, 3}, 21);
    Tensor b = param({1}, 22);
    auto r = grad_check([&](Tape* t) { return probe(t, avgpool2d(t, conv2d(t, img, w, b), 3)); }, {img, w, b});
    CHECK(r.max_rel_error < 1e-5);
}

TEST_CASE("shape ops gradients") {
    Tensor x = param({2, 3, 4}, 23);
    CHECK(grad_check([&](Tape* t) { return probe(t, permute_021(t, x)); }, {x}).max_rel_error < 1e-6);
    Tensor g = param({2, 3, 4, 4}, 24);
    CHECK(grad_check([&](Tape* t) { return probe(t, transpose_last2(t, g)); }, {g}).max_rel_error < 1e-6);
    CHECK(grad_check([&](Tape* t) { return probe(t, zero_pad2d(t, g, 1)); }, {g}).max_rel_error < 1e-6);
    Tensor h = param({2, 3, 4, 4}, 25);
    CHECK(grad_check([&](Tape* t) { return probe(t, stack_pair(t, g, h)); }, {g, h}).max_rel_error < 1e-6);
    CHECK(grad_check([&](Tape* t) { return probe(t, sub(t, g, h)); }, {g, h}).max_rel_error < 1e-6);
    Tensor target = random_tensor({2, 3, 4, 4}, 26);
    CHECK(grad_check([&](Tape* t) { return mse_loss(t, g, target); }, {g}).max_rel_error < 1e-6);
}

TEST_CASE("stack_pair and transpose layouts") {
    Tensor a(Shape{1, 2, 2, 2}, {1, 2, 3, 4, 5, 6, 7, 8});
    Tensor b(Shape{1, 2, 2, 2}, {-1, -2, -3, -4, -5, -6, -7, -8});
    Tensor s = stack_pair(nullptr, a, b);
    CHECK(s.shape() == Shape{2, 2, 2, 2});
    CHECK(s[0] == 1);
    CHECK(s[4] == -1);
    CHECK(s[8] == 5);
    CHECK(s[12] == -5);
    Tensor t = transpose_last2(nullptr, a);
    CHECK(t[1] == 3);
    CHECK(t[2] == 2);
}

TEST_CASE("finite outputs on finite inputs") {
    Tensor x = random_tensor({1, 2, 5, 5}, 27, -50, 50);
    Tensor w = random_tensor({1, 2, 3, 3}, 28, -50, 50);
    Tensor y = sigmoid(nullptr, relu(nullptr, conv2d(nullptr, x, w, Tensor(Shape{1}, 0.0))));
    CHECK(y.all_finite());
    Tensor neg = sigmoid(nullptr, Tensor(Shape{2}, {-1000.0, 1000.0}));
    CHECK(neg.all_finite());
    CHECK(neg[0] >= 0.0);
    CHECK(neg[1] <= 1.0);
}

}
