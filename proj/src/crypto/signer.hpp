#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "common/bytes.hpp"

namespace brook {

enum class CryptoMode : uint8_t {
    kReal,    // Ed25519
    kNull,    // constant-time fake signatures, for isolating pipeline costs
};

inline const char* to_string(CryptoMode m) {
    return m == CryptoMode::kReal ? "real" : "null";
}

struct KeyPair {
    Bytes public_key;     // 32 bytes
    Bytes secret_key;     // 64 bytes

    // Deterministic keypair from a 32-byte seed derived from (run seed, id).
    static KeyPair generate(uint64_t seed, const std::string& id);
};

Bytes sign(CryptoMode mode, const Bytes& secret_key, const Bytes& message);
bool verify(CryptoMode mode, const Bytes& public_key, const Bytes& message, const Bytes& signature);

// Network bootstrap roster: one identity per line, "id hex_public_key".
class IdentityRoster {
  public:
    void add(const std::string& id, Bytes public_key);
    const Bytes* find(const std::string& id) const;
    size_t size() const { return keys_.size(); }

    void save(const std::filesystem::path& path) const;
    static IdentityRoster load(const std::filesystem::path& path);

  private:
    std::unordered_map<std::string, Bytes> keys_;
};

}  // namespace brook
