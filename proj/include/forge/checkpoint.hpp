#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "forge/mask.hpp"
#include "forge/param_store.hpp"

namespace forge {

// Binary container: magic "STSN", u32 version, count-prefixed records.
// Record: u32 name length + UTF-8 name, u8 kind (0 tensor-f64,
// 1 tensor-f32, 2 mask-bits), u32 rank, u64 extents, raw little-endian
// payload. Mask payloads are bit-packed 64-bit words.
struct Checkpoint {
    static constexpr uint32_t kVersion = 1;

    bool f32 = false;  // tensor record precision on save
    std::vector<std::pair<std::string, Tensor>> tensors;
    std::vector<PruningMask> masks;  // record names mask/<owner>/<entry>
    std::string config_text;         // optional echo
    bool has_rng = false;
    uint64_t rng_key = 0;
    uint64_t rng_counter = 0;

    const Tensor* find_tensor(const std::string& name) const;

    // Store <-> record helpers; records are named <prefix>/<entry name>.
    void put_store(const std::string& prefix, const ParameterStore& store);
    // Fills a layout-shaped store (e.g. a fresh init) with saved values.
    ParameterStore take_store(const std::string& prefix, const ParameterStore& layout) const;
    bool has_store(const std::string& prefix, const ParameterStore& layout) const;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace forge
