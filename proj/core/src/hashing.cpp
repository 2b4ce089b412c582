#include "resteer/hashing.hpp"

#include <openssl/evp.h>

#include <cstring>
#include <stdexcept>

namespace resteer {

Digest sha256_bytes(const void* data, size_t len) {
  Digest out{};
  unsigned int out_len = 0;
  if (EVP_Digest(data, len, out.data(), &out_len, EVP_sha256(), nullptr) != 1 || out_len != 32) {
    throw std::runtime_error("sha256: digest computation failed");
  }
  return out;
}

Digest sha256_string(const std::string& s) { return sha256_bytes(s.data(), s.size()); }

std::string hex_digest(const Digest& d) {
  static const char* kHex = "0123456789abcdef";
  std::string out;
  out.reserve(64);
  for (uint8_t b : d) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 0xf]);
  }
  return out;
}

Digest fingerprint_params(const std::vector<std::pair<std::string, Tensor>>& params) {
  std::string buf;
  for (const auto& [name, t] : params) {
    buf.append(name);
    buf.push_back('\0');
    for (int64_t e : t.shape()) {
      for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((static_cast<uint64_t>(e) >> (8 * i)) & 0xff));
    }
    for (double v : t.values()) {
      uint64_t bits;
      std::memcpy(&bits, &v, sizeof(bits));
      for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
    }
  }
  return sha256_string(buf);
}

uint64_t name_key(const std::string& name) {
  const Digest d = sha256_string(name);
  uint64_t key = 0;
  for (int i = 0; i < 8; ++i) key |= static_cast<uint64_t>(d[static_cast<size_t>(i)]) << (8 * i);
  return key;
}

}  // namespace resteer
