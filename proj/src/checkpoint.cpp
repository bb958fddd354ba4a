#include "forge/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "forge/errors.hpp"

namespace forge {

namespace {

constexpr char kMagic[4] = {'S', 'T', 'S', 'N'};

void put_u32(std::string& buf, uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(char((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& buf, uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(char((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& buf, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(buf, bits);
}

void put_f32(std::string& buf, double v) {
    const float f = float(v);
    uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(buf, bits);
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;

    void need(std::size_t n, const char* what) const {
        if (pos + n > buf.size())
            throw IoError(std::string("checkpoint truncated at offset ") + std::to_string(pos) +
                          " while reading " + what);
    }
    uint8_t u8(const char* what) {
        need(1, what);
        return uint8_t(buf[pos++]);
    }
    uint32_t u32(const char* what) {
        need(4, what);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= uint32_t(uint8_t(buf[pos + std::size_t(i)])) << (8 * i);
        pos += 4;
        return v;
    }
    uint64_t u64(const char* what) {
        need(8, what);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= uint64_t(uint8_t(buf[pos + std::size_t(i)])) << (8 * i);
        pos += 8;
        return v;
    }
    double f64(const char* what) {
        const uint64_t bits = u64(what);
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    double f32(const char* what) {
        const uint32_t bits = u32(what);
        float v;
        std::memcpy(&v, &bits, 4);
        return double(v);
    }
    std::string str(std::size_t n, const char* what) {
        need(n, what);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

void put_record_header(std::string& buf, const std::string& name, uint8_t kind,
                       const std::vector<uint64_t>& extents) {
    put_u32(buf, uint32_t(name.size()));
    buf.append(name);
    buf.push_back(char(kind));
    put_u32(buf, uint32_t(extents.size()));
    for (uint64_t e : extents) put_u64(buf, e);
}

void put_bits_record(std::string& buf, const std::string& name, std::size_t nbits,
                     const std::vector<uint64_t>& words) {
    put_record_header(buf, name, 2, {uint64_t(nbits)});
    for (uint64_t w : words) put_u64(buf, w);
}

std::vector<uint64_t> pack_bytes(const std::string& bytes) {
    std::vector<uint64_t> words((bytes.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < bytes.size(); ++i)
        words[i >> 3] |= uint64_t(uint8_t(bytes[i])) << (8 * (i & 7));
    return words;
}

std::string unpack_bytes(const std::vector<uint64_t>& words, std::size_t nbytes) {
    std::string bytes(nbytes, '\0');
    for (std::size_t i = 0; i < nbytes; ++i) bytes[i] = char((words[i >> 3] >> (8 * (i & 7))) & 0xff);
    return bytes;
}

}  // namespace

const Tensor* Checkpoint::find_tensor(const std::string& name) const {
    for (const auto& [n, t] : tensors)
        if (n == name) return &t;
    return nullptr;
}

void Checkpoint::put_store(const std::string& prefix, const ParameterStore& store) {
    for (std::size_t e = 0; e < store.num_entries(); ++e)
        tensors.emplace_back(prefix + "/" + store.entry(e).name, store.entry(e).tensor);
}

ParameterStore Checkpoint::take_store(const std::string& prefix, const ParameterStore& layout) const {
    ParameterStore out = layout;
    for (std::size_t e = 0; e < out.num_entries(); ++e) {
        const Tensor* t = find_tensor(prefix + "/" + out.entry(e).name);
        if (!t) throw IoError("checkpoint: missing record " + prefix + "/" + out.entry(e).name);
        if (t->shape != out.entry(e).tensor.shape)
            throw ShapeError("checkpoint: shape mismatch for " + prefix + "/" + out.entry(e).name);
        out.entry(e).tensor.values = t->values;
    }
    return out;
}

bool Checkpoint::has_store(const std::string& prefix, const ParameterStore& layout) const {
    for (std::size_t e = 0; e < layout.num_entries(); ++e)
        if (!find_tensor(prefix + "/" + layout.entry(e).name)) return false;
    return true;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::string buf;
    buf.append(kMagic, 4);
    put_u32(buf, Checkpoint::kVersion);

    uint32_t count = uint32_t(ckpt.tensors.size());
    for (const auto& m : ckpt.masks) count += uint32_t(m.num_entries());
    if (!ckpt.config_text.empty()) ++count;
    if (ckpt.has_rng) ++count;
    put_u32(buf, count);

    for (const auto& [name, t] : ckpt.tensors) {
        std::vector<uint64_t> extents(t.shape.begin(), t.shape.end());
        put_record_header(buf, name, ckpt.f32 ? 1 : 0, extents);
        if (ckpt.f32)
            for (double v : t.values) put_f32(buf, v);
        else
            for (double v : t.values) put_f64(buf, v);
    }
    for (const auto& m : ckpt.masks)
        for (std::size_t e = 0; e < m.num_entries(); ++e) {
            const auto& bits = m.bits(e);
            put_bits_record(buf, "mask/" + m.owner() + "/" + bits.entry_name, bits.nbits, bits.words);
        }
    if (!ckpt.config_text.empty())
        put_bits_record(buf, "meta/config", ckpt.config_text.size() * 8, pack_bytes(ckpt.config_text));
    if (ckpt.has_rng)
        put_bits_record(buf, "meta/rng", 128, {ckpt.rng_key, ckpt.rng_counter});

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open checkpoint for writing: " + path);
    out.write(buf.data(), std::streamsize(buf.size()));
    if (!out) throw IoError("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    Reader rd{buf};
    const std::string magic = rd.str(4, "magic");
    if (std::memcmp(magic.data(), kMagic, 4) != 0)
        throw IoError("checkpoint: bad magic at offset 0");
    const uint32_t version = rd.u32("version");
    if (version != Checkpoint::kVersion)
        throw IoError("checkpoint: unsupported version " + std::to_string(version) + " at offset 4");

    Checkpoint ckpt;
    const uint32_t count = rd.u32("record count");
    for (uint32_t i = 0; i < count; ++i) {
        const uint32_t name_len = rd.u32("name length");
        const std::string name = rd.str(name_len, "name");
        const uint8_t kind = rd.u8("kind");
        const uint32_t rank = rd.u32("rank");
        std::vector<uint64_t> extents;
        for (uint32_t d = 0; d < rank; ++d) extents.push_back(rd.u64("extent"));
        uint64_t numel = 1;
        for (uint64_t e : extents) numel *= e;

        if (kind == 0 || kind == 1) {
            Tensor t;
            t.shape.assign(extents.begin(), extents.end());
            t.values.reserve(numel);
            for (uint64_t j = 0; j < numel; ++j)
                t.values.push_back(kind == 0 ? rd.f64("tensor payload") : rd.f32("tensor payload"));
            if (kind == 1) ckpt.f32 = true;
            ckpt.tensors.emplace_back(name, std::move(t));
        } else if (kind == 2) {
            if (rank != 1) throw IoError("checkpoint: mask record must be rank 1, offset " + std::to_string(rd.pos));
            const uint64_t nbits = extents[0];
            std::vector<uint64_t> words((nbits + 63) / 64);
            for (auto& w : words) w = rd.u64("mask payload");
            if (name == "meta/config") {
                ckpt.config_text = unpack_bytes(words, nbits / 8);
            } else if (name == "meta/rng") {
                if (words.size() != 2) throw IoError("checkpoint: bad rng record");
                ckpt.has_rng = true;
                ckpt.rng_key = words[0];
                ckpt.rng_counter = words[1];
            } else if (name.rfind("mask/", 0) == 0) {
                const auto slash = name.find('/', 5);
                if (slash == std::string::npos) throw IoError("checkpoint: bad mask record name " + name);
                const std::string owner = name.substr(5, slash - 5);
                if (ckpt.masks.empty() || ckpt.masks.back().owner() != owner) {
                    PruningMask m;
                    m.set_owner(owner);
                    ckpt.masks.push_back(std::move(m));
                }
                PruningMask::Bits bits;
                bits.entry_name = name.substr(slash + 1);
                bits.nbits = nbits;
                bits.words = std::move(words);
                ckpt.masks.back().add_bits(std::move(bits));
            } else {
                throw IoError("checkpoint: unrecognized bits record " + name);
            }
        } else {
            throw IoError("checkpoint: unknown record kind " + std::to_string(kind) + " at offset " +
                          std::to_string(rd.pos));
        }
    }
    if (rd.pos != buf.size())
        throw IoError("checkpoint: " + std::to_string(buf.size() - rd.pos) + " trailing bytes at offset " +
                      std::to_string(rd.pos));
    return ckpt;
}

}  // namespace forge
