#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "resteer/tensor.hpp"

namespace resteer {

using Digest = std::array<uint8_t, 32>;

Digest sha256_bytes(const void* data, size_t len);
Digest sha256_string(const std::string& s);
std::string hex_digest(const Digest& d);

// Order-sensitive hash over (name, extents, little-endian payload) triples.
Digest fingerprint_params(const std::vector<std::pair<std::string, Tensor>>& params);

// Stable 64-bit key for deriving per-name RNG streams.
uint64_t name_key(const std::string& name);

}  // namespace resteer
