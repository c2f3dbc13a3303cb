#pragma once

#include <span>

#include "ledger/types.hpp"

namespace brook {

// h_0 is 32 zero bytes; h_i = SHA256(h_{i-1} || tx_bytes_i).
constexpr Hash32 genesis_hash() { return Hash32{}; }

Hash32 chain_hash_fn(const Hash32& prev_hash, const Bytes& tx_bytes);

// True iff seqs are gapless from 1 and every chain hash recomputes from the
// genesis hash. False is a report, not an error.
bool verify_chain(std::span<const LedgerRecord> records);

}  // namespace brook
