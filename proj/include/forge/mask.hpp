#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "forge/param_store.hpp"

namespace forge {

// Bit-packed binary mask over the prunable entries of a ParameterStore.
// Non-prunable entries are implicitly all-ones. Words are 64-bit,
// little-endian word order, zero-padded.
class PruningMask {
public:
    struct Bits {
        std::string entry_name;
        std::size_t nbits = 0;
        std::vector<uint64_t> words;

        bool test(std::size_t i) const { return (words[i >> 6] >> (i & 63)) & 1u; }
        void clear(std::size_t i) { words[i >> 6] &= ~(uint64_t(1) << (i & 63)); }
        std::size_t popcount() const;
    };

    PruningMask() = default;
    static PruningMask all_ones(const ParameterStore& store, std::string owner);

    const std::string& owner() const { return owner_; }
    void set_owner(std::string o) { owner_ = std::move(o); }

    std::size_t num_entries() const { return bits_.size(); }
    const Bits& bits(std::size_t i) const { return bits_[i]; }
    Bits& bits(std::size_t i) { return bits_[i]; }
    void add_bits(Bits b) { bits_.push_back(std::move(b)); }

    std::size_t surviving() const;
    std::size_t total_bits() const;
    double surviving_fraction() const;
    double sparsity() const { return 1.0 - surviving_fraction(); }

    bool same_layout(const PruningMask& o) const;
    // Layout matches the store's prunable entries by name and size.
    void check_alignment(const ParameterStore& store) const;

private:
    std::string owner_;
    std::vector<Bits> bits_;  // one per prunable entry, in store order
};

// Per-task masks over one shared store layout.
struct MaskSet {
    std::vector<PruningMask> masks;

    const PruningMask& by_task(const std::string& task_id) const;
    bool has_task(const std::string& task_id) const;
};

// Among surviving prunable scalars, zero the floor(p * survivors) with
// smallest |theta|, ranked globally across entries; magnitude ties are
// pruned in flat-index order. Already-pruned bits are unchanged.
PruningMask global_magnitude_prune(const ParameterStore& theta, const PruningMask& m, double p);

// 1 - (1-p)^Q.
double expected_sparsity(double p, int q);

// Surviving count after q rounds of pruning floor(p * survivors).
std::size_t floor_recurrence_survivors(std::size_t n, double p, int q);

// Elementwise product on prunable entries; non-prunable pass through.
ParameterStore apply_mask(const ParameterStore& theta, const PruningMask& m);

// Zero gradients wherever the mask is zero (prunable entries only).
void mask_gradients(Gradients& grads, const ParameterStore& store, const PruningMask& m);

// Jaccard ratio of surviving bits over prunable entries.
double overlap(const PruningMask& a, const PruningMask& b);

enum class ParamPercentMode { One, AllMultiTask, AllSingleTask };
ParamPercentMode param_percent_mode_from_string(const std::string& s);

double param_percent_one(const ParameterStore& store, const PruningMask& m);
double param_percent(const ParameterStore& store, const MaskSet& masks, ParamPercentMode mode);

}  // namespace forge
