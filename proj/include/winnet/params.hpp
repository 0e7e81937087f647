#pragma once

#include "winnet/tensor.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace winnet {

struct NamedParam {
    std::string name;
    Tensor value;
};

/// Ordered collection of named trainable tensors.
class ParamStore {
public:
    /// Registers a zero-filled tensor that requires gradients.
    Tensor add(std::string name, Shape shape);

    Tensor get(std::string_view name) const;
    bool contains(std::string_view name) const;

    const std::vector<NamedParam>& entries() const { return entries_; }
    std::vector<Tensor> tensors() const;
    std::size_t size() const { return entries_.size(); }
    std::size_t numel() const;

    void zero_grad();
    bool all_finite() const;

    /// Deep copy of the values only.
    std::vector<std::vector<double>> snapshot() const;
    void restore(const std::vector<std::vector<double>>& values);

private:
    std::vector<NamedParam> entries_;
};

} // namespace winnet
