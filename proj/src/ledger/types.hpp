#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "common/bytes.hpp"

namespace brook {

using TxId = std::array<uint8_t, 16>;

// Version 0 is reserved for "key absent"; committed keys carry the commit
// sequence number of the transaction that last wrote them.
using Version = uint64_t;
constexpr Version kVersionAbsent = 0;

struct Key {
    std::string ns;    // chaincode id, non-empty
    Bytes name;

    auto operator<=>(const Key&) const = default;
};

struct KeyHash {
    size_t operator()(const Key& k) const {
        // FNV-1a over namespace, a separator, and the name.
        uint64_t h = 14695981039346656037ull;
        auto mix = [&](uint8_t b) { h = (h ^ b) * 1099511628211ull; };
        for (char c : k.ns) mix(static_cast<uint8_t>(c));
        mix(0);
        for (uint8_t b : k.name) mix(b);
        return static_cast<size_t>(h);
    }
};

inline Key make_key(std::string ns, std::string_view name) {
    return Key{std::move(ns), to_bytes(name)};
}

struct ReadEntry {
    Key key;
    Version version = kVersionAbsent;

    auto operator<=>(const ReadEntry&) const = default;
};

struct WriteEntry {
    Key key;
    bool is_delete = false;
    Bytes value;    // empty when is_delete

    auto operator<=>(const WriteEntry&) const = default;
};

// Reads and writes are kept sorted by key with no duplicates; this is what
// makes the serialized form canonical.
struct ReadWriteSet {
    std::vector<ReadEntry> reads;
    std::vector<WriteEntry> writes;

    auto operator<=>(const ReadWriteSet&) const = default;
};

struct Endorsement {
    std::string endorser_id;
    Bytes signature;

    auto operator<=>(const Endorsement&) const = default;
};

struct Transaction {
    TxId tx_id{};
    std::string chaincode_id;
    std::vector<Bytes> args;
    ReadWriteSet rwset;
    std::vector<Endorsement> endorsements;
    Bytes client_sig;
    int64_t submit_ts = 0;    // nanoseconds since epoch

    auto operator<=>(const Transaction&) const = default;
};

struct LedgerRecord {
    uint64_t seq = 0;
    bool valid = false;
    Hash32 chain_hash{};
    Bytes tx_bytes;
};

}  // namespace brook
