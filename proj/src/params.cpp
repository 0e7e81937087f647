#include "winnet/params.hpp"

#include "winnet/error.hpp"

#include <algorithm>

namespace winnet {

Tensor ParamStore::add(std::string name, Shape shape) {
    if (contains(name)) throw UsageError("parameter '" + name + "' registered twice");
    Tensor t(std::move(shape));
    t.set_requires_grad(true);
    entries_.push_back({std::move(name), t});
    return t;
}

Tensor ParamStore::get(std::string_view name) const {
    for (const auto& e : entries_) {
        if (e.name == name) return e.value;
    }
    throw UsageError("unknown parameter '" + std::string(name) + "'");
}

bool ParamStore::contains(std::string_view name) const {
    return std::any_of(entries_.begin(), entries_.end(), [&](const NamedParam& e) { return e.name == name; });
}

std::vector<Tensor> ParamStore::tensors() const {
    std::vector<Tensor> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.value);
    return out;
}

std::size_t ParamStore::numel() const {
    std::size_t total = 0;
    for (const auto& e : entries_) total += e.value.numel();
    return total;
}

void ParamStore::zero_grad() {
    for (auto& e : entries_) {
        e.value.grad();
        e.value.zero_grad();
    }
}

bool ParamStore::all_finite() const {
    return std::all_of(entries_.begin(), entries_.end(), [](const NamedParam& e) { return e.value.all_finite(); });
}

std::vector<std::vector<double>> ParamStore::snapshot() const {
    std::vector<std::vector<double>> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.emplace_back(e.value.data().begin(), e.value.data().end());
    return out;
}

void ParamStore::restore(const std::vector<std::vector<double>>& values) {
    if (values.size() != entries_.size()) throw DimensionError("snapshot does not match parameter layout");
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        auto dst = entries_[i].value.data();
        if (values[i].size() != dst.size()) {
            throw DimensionError("snapshot size mismatch for '" + entries_[i].name + "'");
        }
        std::copy(values[i].begin(), values[i].end(), dst.begin());
    }
}

} // namespace winnet
