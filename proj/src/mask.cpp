#include "forge/mask.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "forge/errors.hpp"

namespace forge {

std::size_t PruningMask::Bits::popcount() const {
    std::size_t n = 0;
    for (uint64_t w : words) n += std::size_t(std::popcount(w));
    return n;
}

PruningMask PruningMask::all_ones(const ParameterStore& store, std::string owner) {
    PruningMask m;
    m.owner_ = std::move(owner);
    for (std::size_t e = 0; e < store.num_entries(); ++e) {
        const auto& entry = store.entry(e);
        if (!entry.prunable) continue;
        Bits b;
        b.entry_name = entry.name;
        b.nbits = entry.tensor.size();
        b.words.assign((b.nbits + 63) / 64, ~uint64_t(0));
        if (b.nbits % 64) b.words.back() = (uint64_t(1) << (b.nbits % 64)) - 1;
        m.bits_.push_back(std::move(b));
    }
    return m;
}

std::size_t PruningMask::surviving() const {
    std::size_t n = 0;
    for (const auto& b : bits_) n += b.popcount();
    return n;
}

std::size_t PruningMask::total_bits() const {
    std::size_t n = 0;
    for (const auto& b : bits_) n += b.nbits;
    return n;
}

double PruningMask::surviving_fraction() const {
    const std::size_t total = total_bits();
    if (total == 0) throw ShapeError("mask has no prunable bits");
    return double(surviving()) / double(total);
}

bool PruningMask::same_layout(const PruningMask& o) const {
    if (bits_.size() != o.bits_.size()) return false;
    for (std::size_t i = 0; i < bits_.size(); ++i)
        if (bits_[i].entry_name != o.bits_[i].entry_name || bits_[i].nbits != o.bits_[i].nbits) return false;
    return true;
}

void PruningMask::check_alignment(const ParameterStore& store) const {
    std::size_t bi = 0;
    for (std::size_t e = 0; e < store.num_entries(); ++e) {
        const auto& entry = store.entry(e);
        if (!entry.prunable) continue;
        if (bi >= bits_.size() || bits_[bi].entry_name != entry.name || bits_[bi].nbits != entry.tensor.size())
            throw ShapeError("mask layout does not match store at entry " + entry.name);
        ++bi;
    }
    if (bi != bits_.size()) throw ShapeError("mask has extra entries beyond store layout");
}

const PruningMask& MaskSet::by_task(const std::string& task_id) const {
    for (const auto& m : masks)
        if (m.owner() == task_id) return m;
    throw ConfigError("no mask for task " + task_id);
}

bool MaskSet::has_task(const std::string& task_id) const {
    for (const auto& m : masks)
        if (m.owner() == task_id) return true;
    return false;
}

PruningMask global_magnitude_prune(const ParameterStore& theta, const PruningMask& m, double p) {
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("prune rate p must lie in (0,1)");
    m.check_alignment(theta);

    struct Cand {
        double mag;
        std::size_t order;     // global flat position among prunable scalars
        std::size_t bits_idx;  // which Bits
        std::size_t bit;       // position within Bits
    };
    std::vector<Cand> survivors;
    std::size_t order = 0, bi = 0;
    for (std::size_t e = 0; e < theta.num_entries(); ++e) {
        const auto& entry = theta.entry(e);
        if (!entry.prunable) continue;
        const auto& bits = m.bits(bi);
        for (std::size_t i = 0; i < bits.nbits; ++i, ++order)
            if (bits.test(i)) survivors.push_back({std::fabs(entry.tensor.values[i]), order, bi, i});
        ++bi;
    }
    if (survivors.empty()) throw ShapeError("prune: mask has no surviving bits");

    const std::size_t k = std::size_t(std::floor(p * double(survivors.size())));
    if (k >= survivors.size()) throw ConfigError("prune: would leave zero survivors");

    std::sort(survivors.begin(), survivors.end(), [](const Cand& a, const Cand& b) {
        if (a.mag != b.mag) return a.mag < b.mag;
        return a.order < b.order;
    });

    PruningMask out = m;
    for (std::size_t i = 0; i < k; ++i) out.bits(survivors[i].bits_idx).clear(survivors[i].bit);
    return out;
}

double expected_sparsity(double p, int q) {
    return 1.0 - std::pow(1.0 - p, double(q));
}

std::size_t floor_recurrence_survivors(std::size_t n, double p, int q) {
    for (int i = 0; i < q; ++i) n -= std::size_t(std::floor(p * double(n)));
    return n;
}

ParameterStore apply_mask(const ParameterStore& theta, const PruningMask& m) {
    m.check_alignment(theta);
    ParameterStore out = theta;
    std::size_t bi = 0;
    for (std::size_t e = 0; e < out.num_entries(); ++e) {
        auto& entry = out.entry(e);
        if (!entry.prunable) continue;
        const auto& bits = m.bits(bi++);
        for (std::size_t i = 0; i < bits.nbits; ++i)
            if (!bits.test(i)) entry.tensor.values[i] = 0.0;
    }
    return out;
}

void mask_gradients(Gradients& grads, const ParameterStore& store, const PruningMask& m) {
    m.check_alignment(store);
    if (grads.by_entry.size() != store.num_entries()) throw ShapeError("mask_gradients: entry count mismatch");
    std::size_t bi = 0;
    for (std::size_t e = 0; e < store.num_entries(); ++e) {
        if (!store.entry(e).prunable) continue;
        const auto& bits = m.bits(bi++);
        auto& g = grads.by_entry[e];
        if (g.size() != bits.nbits) throw ShapeError("mask_gradients: size mismatch at " + bits.entry_name);
        for (std::size_t i = 0; i < bits.nbits; ++i)
            if (!bits.test(i)) g[i] = 0.0;
    }
}

double overlap(const PruningMask& a, const PruningMask& b) {
    if (!a.same_layout(b)) throw ShapeError("overlap: mask layouts differ");
    std::size_t inter = 0, uni = 0;
    for (std::size_t e = 0; e < a.num_entries(); ++e) {
        const auto& wa = a.bits(e).words;
        const auto& wb = b.bits(e).words;
        for (std::size_t w = 0; w < wa.size(); ++w) {
            inter += std::size_t(std::popcount(wa[w] & wb[w]));
            uni += std::size_t(std::popcount(wa[w] | wb[w]));
        }
    }
    if (uni == 0) throw ShapeError("overlap: both masks are empty");
    return double(inter) / double(uni);
}

ParamPercentMode param_percent_mode_from_string(const std::string& s) {
    if (s == "one") return ParamPercentMode::One;
    if (s == "all-multitask") return ParamPercentMode::AllMultiTask;
    if (s == "all-singletask") return ParamPercentMode::AllSingleTask;
    throw ConfigError("unknown param-percent mode: " + s);
}

double param_percent_one(const ParameterStore& store, const PruningMask& m) {
    m.check_alignment(store);
    const std::size_t nonprunable = store.total_scalars() - store.prunable_scalars();
    return 100.0 * double(m.surviving() + nonprunable) / double(store.total_scalars());
}

double param_percent(const ParameterStore& store, const MaskSet& masks, ParamPercentMode mode) {
    if (masks.masks.empty()) throw ConfigError("param_percent: empty mask set");
    switch (mode) {
        case ParamPercentMode::One:
            return param_percent_one(store, masks.masks.front());
        case ParamPercentMode::AllMultiTask: {
            PruningMask uni = masks.masks.front();
            for (std::size_t t = 1; t < masks.masks.size(); ++t) {
                const auto& m = masks.masks[t];
                if (!uni.same_layout(m)) throw ShapeError("param_percent: mask layouts differ");
                for (std::size_t e = 0; e < uni.num_entries(); ++e)
                    for (std::size_t w = 0; w < uni.bits(e).words.size(); ++w)
                        uni.bits(e).words[w] |= m.bits(e).words[w];
            }
            return param_percent_one(store, uni);
        }
        case ParamPercentMode::AllSingleTask: {
            double sum = 0.0;
            for (const auto& m : masks.masks) sum += param_percent_one(store, m);
            return sum;
        }
    }
    throw ConfigError("param_percent: unknown mode");
}

}  // namespace forge
