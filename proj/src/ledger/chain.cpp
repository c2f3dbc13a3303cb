#include "ledger/chain.hpp"

#include "common/sha256.hpp"

namespace brook {

Hash32 chain_hash_fn(const Hash32& prev_hash, const Bytes& tx_bytes) {
    return sha256_concat(prev_hash.data(), prev_hash.size(), tx_bytes.data(), tx_bytes.size());
}

bool verify_chain(std::span<const LedgerRecord> records) {
    Hash32 prev = genesis_hash();
    uint64_t expect_seq = 1;
    for (const auto& rec : records) {
        if (rec.seq != expect_seq) return false;
        Hash32 h = chain_hash_fn(prev, rec.tx_bytes);
        if (h != rec.chain_hash) return false;
        prev = h;
        ++expect_seq;
    }
    return true;
}

}  // namespace brook
