#include "common/sha256.hpp"

#include <sodium.h>

namespace brook {

Hash32 sha256(const uint8_t* data, size_t size) {
    Hash32 out;
    crypto_hash_sha256(out.data(), data, size);
    return out;
}

Hash32 sha256(const Bytes& data) { return sha256(data.data(), data.size()); }

Hash32 sha256_concat(const uint8_t* a, size_t an, const uint8_t* b, size_t bn) {
    crypto_hash_sha256_state st;
    crypto_hash_sha256_init(&st);
    crypto_hash_sha256_update(&st, a, an);
    crypto_hash_sha256_update(&st, b, bn);
    Hash32 out;
    crypto_hash_sha256_final(&st, out.data());
    return out;
}

}  // namespace brook
