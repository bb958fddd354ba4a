#include "forge/param_store.hpp"

#include <cmath>

namespace forge {

void ParameterStore::add(std::string name, Tensor t, bool prunable) {
    if (index_.count(name)) throw ConfigError("duplicate parameter name: " + name);
    index_[name] = entries_.size();
    offsets_.push_back(total_scalars_);
    total_scalars_ += t.size();
    entries_.push_back(Entry{std::move(name), std::move(t), prunable});
}

std::size_t ParameterStore::index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("unknown parameter name: " + name);
    return it->second;
}

std::size_t ParameterStore::prunable_scalars() const {
    std::size_t n = 0;
    for (const auto& e : entries_)
        if (e.prunable) n += e.tensor.size();
    return n;
}

bool ParameterStore::same_layout(const ParameterStore& o) const {
    if (entries_.size() != o.entries_.size()) return false;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].name != o.entries_[i].name) return false;
        if (entries_[i].tensor.shape != o.entries_[i].tensor.shape) return false;
        if (entries_[i].prunable != o.entries_[i].prunable) return false;
    }
    return true;
}

bool ParameterStore::same_values(const ParameterStore& o) const {
    if (!same_layout(o)) return false;
    for (std::size_t i = 0; i < entries_.size(); ++i)
        if (entries_[i].tensor.values != o.entries_[i].tensor.values) return false;
    return true;
}

std::vector<double> ParameterStore::flatten() const {
    std::vector<double> flat;
    flat.reserve(total_scalars_);
    for (const auto& e : entries_) flat.insert(flat.end(), e.tensor.values.begin(), e.tensor.values.end());
    return flat;
}

void ParameterStore::unflatten(const std::vector<double>& flat) {
    if (flat.size() != total_scalars_) throw ShapeError("unflatten: size mismatch");
    std::size_t pos = 0;
    for (auto& e : entries_) {
        std::copy(flat.begin() + long(pos), flat.begin() + long(pos + e.tensor.size()), e.tensor.values.begin());
        pos += e.tensor.size();
    }
}

Gradients Gradients::zeros_like(const ParameterStore& store) {
    Gradients g;
    g.by_entry.resize(store.num_entries());
    for (std::size_t i = 0; i < store.num_entries(); ++i)
        g.by_entry[i].assign(store.entry(i).tensor.size(), 0.0);
    return g;
}

void Gradients::zero() {
    for (auto& v : by_entry) std::fill(v.begin(), v.end(), 0.0);
}

bool Gradients::all_finite() const {
    for (const auto& v : by_entry)
        for (double x : v)
            if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace forge
