#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <unordered_map>
#include <vector>

#include "ledger/types.hpp"

namespace brook {

struct StateEntry {
    Bytes value;
    Version version = kVersionAbsent;
};

struct SnapshotRead {
    Key key;
    Version version = kVersionAbsent;
    std::optional<Bytes> value;
};

// In-memory versioned key-value store (the materialized view). Lock
// striping replaces the single store-wide reader/writer lock: endorsement
// readers take per-stripe shared locks, the single committing thread takes
// exclusive locks on the touched stripes only, always in ascending stripe
// order.
class StateDb {
  public:
    explicit StateDb(size_t stripe_count = 64);

    size_t stripe_for(const Key& key) const;
    size_t stripe_count() const { return stripes_.size(); }

    std::optional<StateEntry> get(const Key& key) const;

    // True iff every read's version matches the store (absent keys match
    // version 0). Committer-side callers already hold the stripe locks via
    // check_and_commit; this standalone form locks per stripe itself.
    bool mvcc_check(const std::vector<ReadEntry>& reads) const;

    // Precondition: commit_seq exceeds every current version of the written
    // keys; the caller is the single committing thread.
    void apply_writes(const std::vector<WriteEntry>& writes, uint64_t commit_seq);

    // Atomic MVCC check + apply under exclusive locks on the stripes
    // touched by either the reads or the writes. Returns the validity
    // decision; writes are applied only when valid.
    bool check_and_commit(const ReadWriteSet& rwset, uint64_t commit_seq);

    // Batch read with per-stripe consistency, used by endorsement.
    std::vector<SnapshotRead> snapshot_read(const std::vector<Key>& keys) const;

    uint64_t last_applied_seq() const;

    // Digest over the sorted (key, version, value) contents; equal digests
    // mean equal stores.
    Hash32 digest() const;

    // Checkpoint file: [u64 last_applied_seq] then
    // [u32 key length][key bytes][u64 version][u32 value length][value bytes].
    void save_checkpoint(const std::filesystem::path& path) const;
    void load_checkpoint(const std::filesystem::path& path);

  private:
    struct Stripe {
        mutable std::shared_mutex mutex;
        std::unordered_map<Key, StateEntry, KeyHash> entries;
    };

    std::vector<std::unique_ptr<Stripe>> stripes_;
    std::atomic<uint64_t> last_applied_seq_{0};
};

}  // namespace brook
