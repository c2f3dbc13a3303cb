#pragma once

#include "common/codec.hpp"
#include "ledger/types.hpp"

// Canonical serialization: fixed field order, little-endian fixed-width
// integers, length-prefixed byte strings. Two structurally equal values
// always produce identical bytes; signatures and chain hashes depend on
// this.

namespace brook {

void write_key(Writer& w, const Key& k);
Key read_key(Reader& r);

Bytes serialize_rwset(const ReadWriteSet& rwset);
ReadWriteSet deserialize_rwset(Reader& r);

Bytes serialize_tx(const Transaction& tx);
Transaction deserialize_tx(const Bytes& bytes);

// Ledger file record frame (bit-exact):
// [u32 total record length][u64 seq][u8 valid][32-byte chain hash][tx bytes]
// where "total record length" counts everything after the length field.
Bytes frame_record(const LedgerRecord& rec);
LedgerRecord unframe_record(const Bytes& frame_body);

// Size of a framed record for a given transaction payload length.
constexpr size_t record_frame_size(size_t tx_len) { return 4 + 8 + 1 + 32 + tx_len; }

}  // namespace brook
