#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "oled/layers.hpp"
#include "oled/tensor.hpp"

namespace oled {

/// On-disk model snapshot: "OLEDCKPT" magic, format version, a key=value
/// config snapshot, named little-endian float32 tensors, and a trailing
/// CRC-32 over everything before it. load(save(x)) is bit-exact.
struct Checkpoint {
    static constexpr std::uint32_t kVersion = 1;

    std::map<std::string, std::string> meta;
    std::vector<std::pair<std::string, Tensor>> tensors; // saved in order

    void add_stack(const std::string& prefix, LayerStack& stack);
    /// Copies stored tensors into the stack's parameters (names must match
    /// exactly and exhaustively for the prefix).
    void restore_stack(const std::string& prefix, LayerStack& stack) const;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

/// CRC-32 (polynomial 0xEDB88320), the usual zlib flavor.
std::uint32_t crc32(const std::uint8_t* data, std::size_t len, std::uint32_t seed = 0);

} // namespace oled
