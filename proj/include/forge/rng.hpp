#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace forge {

// Counter-based generator (splitmix64 finalizer over key+counter).
// State is two u64 words, so streams can be split by key and serialized
// exactly. Every stream is a pure function of (key, counter).
class Rng {
public:
    explicit Rng(uint64_t key, uint64_t counter = 0) : key_(key), ctr_(counter) {}

    static uint64_t mix(uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Derive an independent stream for a labeled sub-purpose.
    static Rng derive(uint64_t key, uint64_t stream, uint64_t substream = 0) {
        return Rng(mix(mix(key ^ 0x5851f42d4c957f2dull) + mix(stream) + 0x9e3779b97f4a7c15ull * substream));
    }

    uint64_t next_u64() { return mix(key_ + 0x9e3779b97f4a7c15ull * ++ctr_); }

    // Uniform in [0, 1).
    double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n).
    uint64_t next_below(uint64_t n) { return next_u64() % n; }

    // Box-Muller; one gaussian per call, second half discarded so the
    // state stays a pure counter (no cached value).
    double next_gaussian() {
        double u1 = next_double();
        double u2 = next_double();
        while (u1 <= 0.0) u1 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    // Deterministic Fisher-Yates.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = size_t(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    uint64_t key() const { return key_; }
    uint64_t counter() const { return ctr_; }
    void restore(uint64_t key, uint64_t counter) { key_ = key; ctr_ = counter; }

private:
    uint64_t key_;
    uint64_t ctr_;
};

}  // namespace forge
