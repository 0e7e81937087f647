#include "winnet/tensor.hpp"

#include "winnet/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace winnet {

std::size_t shape_numel(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ',';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

Tensor::Tensor() : s_(std::make_shared<Storage>()) {}

Tensor::Tensor(Shape shape, double fill) : s_(std::make_shared<Storage>()) {
    if (shape.empty() || shape.size() > 4) {
        throw DimensionError("tensor rank must be 1..4, got " + std::to_string(shape.size()));
    }
    s_->data.assign(shape_numel(shape), fill);
    s_->shape = std::move(shape);
}

Tensor::Tensor(Shape shape, std::vector<double> values) : s_(std::make_shared<Storage>()) {
    if (shape.empty() || shape.size() > 4) {
        throw DimensionError("tensor rank must be 1..4, got " + std::to_string(shape.size()));
    }
    if (shape_numel(shape) != values.size()) {
        throw DimensionError("shape " + shape_str(shape) + " holds " +
                             std::to_string(shape_numel(shape)) + " values, got " +
                             std::to_string(values.size()));
    }
    s_->shape = std::move(shape);
    s_->data = std::move(values);
}

std::size_t Tensor::dim(std::size_t axis) const {
    if (axis >= s_->shape.size()) {
        throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " +
                             shape_str(s_->shape));
    }
    return s_->shape[axis];
}

Tensor& Tensor::set_requires_grad(bool on) {
    s_->requires_grad = on;
    return *this;
}

std::span<double> Tensor::grad() const {
    if (s_->grad.size() != s_->data.size()) s_->grad.assign(s_->data.size(), 0.0);
    return s_->grad;
}

void Tensor::zero_grad() {
    std::fill(s_->grad.begin(), s_->grad.end(), 0.0);
}

Tensor Tensor::clone() const {
    return Tensor(s_->shape, s_->data);
}

bool Tensor::all_finite() const {
    return std::all_of(s_->data.begin(), s_->data.end(), [](double v) { return std::isfinite(v); });
}

bool Tape::tracks(const Tape* tape, std::initializer_list<const Tensor*> inputs) {
    if (tape == nullptr) return false;
    return std::any_of(inputs.begin(), inputs.end(),
                       [](const Tensor* t) { return t != nullptr && t->requires_grad(); });
}

void Tape::record(std::string op, std::vector<Tensor> inputs, Tensor output, BackwardFn fn) {
    output.set_requires_grad(true);
    nodes_.push_back(Node{std::move(op), std::move(inputs), std::move(output), std::move(fn)});
}

std::vector<std::string> Tape::trace() const {
    std::vector<std::string> lines;
    lines.reserve(nodes_.size());
    for (const auto& n : nodes_) lines.push_back(n.op + " " + shape_str(n.output.shape()));
    return lines;
}

void backward(Tape& tape, const Tensor& loss) {
    if (loss.numel() != 1) {
        throw UsageError("backward needs a scalar loss, got shape " + shape_str(loss.shape()));
    }
    if (!loss.requires_grad()) {
        throw UsageError("loss is not connected to any tracked tensor");
    }
    auto& nodes = tape.nodes_;
    for (auto& n : nodes) {
        n.output.grad();
        n.output.zero_grad();
    }
    Tensor seed = loss;
    seed.grad()[0] = 1.0;
    for (auto it = nodes.rbegin(); it != nodes.rend(); ++it) {
        if (it->backward) it->backward();
    }
}

} // namespace winnet
