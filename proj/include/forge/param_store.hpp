#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "forge/tensor.hpp"

namespace forge {

// Ordered, named collection of parameter tensors. Iteration order is
// insertion order; the flat index enumerates scalars by entry order,
// then row-major within each tensor.
class ParameterStore {
public:
    struct Entry {
        std::string name;
        Tensor tensor;
        bool prunable = true;
    };

    void add(std::string name, Tensor t, bool prunable);

    std::size_t num_entries() const { return entries_.size(); }
    const Entry& entry(std::size_t i) const { return entries_[i]; }
    Entry& entry(std::size_t i) { return entries_[i]; }

    bool has(const std::string& name) const { return index_.count(name) != 0; }
    std::size_t index_of(const std::string& name) const;
    const Tensor& tensor(const std::string& name) const { return entries_[index_of(name)].tensor; }
    Tensor& tensor(const std::string& name) { return entries_[index_of(name)].tensor; }

    std::size_t total_scalars() const { return total_scalars_; }
    std::size_t prunable_scalars() const;
    std::size_t flat_offset(std::size_t entry_index) const { return offsets_[entry_index]; }

    // Same entry names, shapes and prunable flags.
    bool same_layout(const ParameterStore& o) const;
    // Bitwise equality of all values.
    bool same_values(const ParameterStore& o) const;

    std::vector<double> flatten() const;
    void unflatten(const std::vector<double>& flat);

private:
    std::vector<Entry> entries_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<std::size_t> offsets_;
    std::size_t total_scalars_ = 0;
};

// Gradient buffers parallel to a store's entries.
struct Gradients {
    std::vector<std::vector<double>> by_entry;

    static Gradients zeros_like(const ParameterStore& store);
    void zero();
    bool all_finite() const;
};

}  // namespace forge
