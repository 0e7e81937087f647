#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace winnet {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/**
 * Dense row-major float64 tensor with up to four axes.
 *
 * A Tensor is a handle: copies share the same storage, the way autograd
 * frameworks pass activations around. Use clone() for an independent copy.
 * The gradient buffer is allocated lazily the first time it is written.
 */
class Tensor {
public:
    Tensor();
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> values);

    static Tensor scalar(double v) { return Tensor(Shape{1}, v); }

    const Shape& shape() const { return s_->shape; }
    std::size_t rank() const { return s_->shape.size(); }
    std::size_t dim(std::size_t axis) const;
    std::size_t numel() const { return s_->data.size(); }
    bool empty() const { return s_->data.empty(); }

    std::span<const double> data() const { return s_->data; }
    std::span<double> data() { return s_->data; }
    double operator[](std::size_t i) const { return s_->data[i]; }
    double& operator[](std::size_t i) { return s_->data[i]; }

    bool requires_grad() const { return s_->requires_grad; }
    Tensor& set_requires_grad(bool on);

    bool has_grad() const { return !s_->grad.empty(); }
    /// Gradient view; allocates a zero buffer on first access. Shared like the values.
    std::span<double> grad() const;
    void zero_grad();

    /// Deep copy of values; the copy does not track gradients.
    Tensor clone() const;
    bool same_storage(const Tensor& other) const { return s_ == other.s_; }
    bool all_finite() const;

private:
    struct Storage {
        Shape shape;
        std::vector<double> data;
        mutable std::vector<double> grad;
        bool requires_grad = false;
    };
    std::shared_ptr<Storage> s_;
};

/**
 * Ordered record of differentiable operations.
 *
 * Nodes are appended as ops execute, so inputs always precede the node that
 * consumes them. backward() walks the list once in reverse.
 */
class Tape {
public:
    using BackwardFn = std::function<void()>;

    struct Node {
        std::string op;
        std::vector<Tensor> inputs;
        Tensor output;
        BackwardFn backward;
    };

    /// True when an op over these inputs must be recorded.
    static bool tracks(const Tape* tape, std::initializer_list<const Tensor*> inputs);

    /// Appends a node and marks its output as gradient-carrying.
    void record(std::string op, std::vector<Tensor> inputs, Tensor output, BackwardFn fn);

    const std::vector<Node>& nodes() const { return nodes_; }
    std::size_t size() const { return nodes_.size(); }
    void clear() { nodes_.clear(); }

    /// One line per node: "op shape". Independent of tensor values.
    std::vector<std::string> trace() const;

private:
    friend void backward(Tape& tape, const Tensor& loss);
    std::vector<Node> nodes_;
};

/**
 * Reverse-mode sweep seeded with d(loss)/d(loss) = 1.
 *
 * Intermediate gradients are reset before the sweep so replaying the same
 * tape is idempotent; leaf gradients accumulate.
 */
void backward(Tape& tape, const Tensor& loss);

} // namespace winnet
