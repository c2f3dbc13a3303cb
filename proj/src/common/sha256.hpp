#pragma once

#include "common/bytes.hpp"

namespace brook {

Hash32 sha256(const uint8_t* data, size_t size);
Hash32 sha256(const Bytes& data);

// SHA256 over the concatenation of two byte ranges, without copying.
Hash32 sha256_concat(const uint8_t* a, size_t an, const uint8_t* b, size_t bn);

}  // namespace brook
