#include "oled/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>

namespace oled {

namespace {

constexpr char kMagic[8] = {'O', 'L', 'E', 'D', 'C', 'K', 'P', 'T'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void put_f32(std::vector<std::uint8_t>& out, float f) {
    std::uint32_t v;
    std::memcpy(&v, &f, 4);
    put_u32(out, v);
}

void put_str(std::vector<std::uint8_t>& out, const std::string& s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out.insert(out.end(), s.begin(), s.end());
}

class Reader {
public:
    Reader(const std::uint8_t* p, std::size_t n, std::string path)
        : p_(p), n_(n), path_(std::move(path)) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p_[pos_ + i]) << (8 * i);
        pos_ += 8;
        return v;
    }
    float f32() {
        const std::uint32_t v = u32();
        float f;
        std::memcpy(&f, &v, 4);
        return f;
    }
    std::string str() {
        const std::uint32_t len = u32();
        need(len);
        std::string s(reinterpret_cast<const char*>(p_ + pos_), len);
        pos_ += len;
        return s;
    }
    std::size_t pos() const { return pos_; }

private:
    void need(std::size_t n) const {
        if (pos_ + n > n_) throw IoError(path_ + ": truncated checkpoint");
    }
    const std::uint8_t* p_;
    std::size_t n_, pos_ = 0;
    std::string path_;
};

} // namespace

std::uint32_t crc32(const std::uint8_t* data, std::size_t len, std::uint32_t seed) {
    static const std::array<std::uint32_t, 256> table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int j = 0; j < 8; ++j) c = (c & 1) ? (0xEDB88320u ^ (c >> 1)) : (c >> 1);
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t c = seed ^ 0xFFFFFFFFu;
    for (std::size_t i = 0; i < len; ++i) c = table[(c ^ data[i]) & 0xff] ^ (c >> 8);
    return c ^ 0xFFFFFFFFu;
}

void Checkpoint::add_stack(const std::string& prefix, LayerStack& stack) {
    for (const ParamRef& p : stack.parameters())
        tensors.emplace_back(prefix + "." + p.name, *p.value);
}

void Checkpoint::restore_stack(const std::string& prefix, LayerStack& stack) const {
    std::map<std::string, const Tensor*> by_name;
    for (const auto& [name, t] : tensors) by_name.emplace(name, &t);
    for (const ParamRef& p : stack.parameters()) {
        auto it = by_name.find(prefix + "." + p.name);
        if (it == by_name.end())
            throw IoError("checkpoint is missing tensor '" + prefix + "." + p.name + "'");
        if (it->second->shape != p.value->shape)
            throw IoError("checkpoint tensor '" + prefix + "." + p.name + "' has shape " +
                          Tensor::shape_str(it->second->shape) + ", model expects " +
                          Tensor::shape_str(p.value->shape));
        *p.value = *it->second;
    }
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + 8);
    put_u32(out, Checkpoint::kVersion);

    std::string meta_block;
    for (const auto& [k, v] : ckpt.meta) meta_block += k + " = " + v + "\n";
    put_str(out, meta_block);

    put_u64(out, ckpt.tensors.size());
    for (const auto& [name, t] : ckpt.tensors) {
        put_str(out, name);
        put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
        for (int e : t.shape) put_u32(out, static_cast<std::uint32_t>(e));
        for (float f : t.data) put_f32(out, f);
    }
    put_u32(out, crc32(out.data(), out.size()));

    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write '" + path + "'");
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("short write to '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 8) != 0)
        throw IoError(path + ": not an OLEDCKPT file");

    const std::uint32_t stored_crc = [&] {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(bytes[bytes.size() - 4 + i]) << (8 * i);
        return v;
    }();
    if (crc32(bytes.data(), bytes.size() - 4) != stored_crc)
        throw IoError(path + ": checksum mismatch (corrupt checkpoint)");

    Reader r(bytes.data() + 8, bytes.size() - 12, path);
    Checkpoint ckpt;
    const std::uint32_t version = r.u32();
    if (version != Checkpoint::kVersion)
        throw IoError(path + ": unsupported checkpoint version " + std::to_string(version));

    const std::string meta_block = r.str();
    std::size_t pos = 0;
    while (pos < meta_block.size()) {
        const std::size_t eol = meta_block.find('\n', pos);
        const std::string line = meta_block.substr(pos, eol - pos);
        pos = (eol == std::string::npos) ? meta_block.size() : eol + 1;
        const std::size_t sep = line.find(" = ");
        if (sep != std::string::npos)
            ckpt.meta.emplace(line.substr(0, sep), line.substr(sep + 3));
    }

    const std::uint64_t n = r.u64();
    for (std::uint64_t i = 0; i < n; ++i) {
        const std::string name = r.str();
        const std::uint32_t rank = r.u32();
        std::vector<int> shape(rank);
        for (std::uint32_t d = 0; d < rank; ++d) shape[d] = static_cast<int>(r.u32());
        Tensor t(shape);
        for (float& v : t.data) v = r.f32();
        ckpt.tensors.emplace_back(name, std::move(t));
    }
    return ckpt;
}

} // namespace oled
