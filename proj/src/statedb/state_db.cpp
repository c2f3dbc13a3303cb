#include "statedb/state_db.hpp"

#include <algorithm>
#include <cassert>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include "common/codec.hpp"
#include "common/sha256.hpp"
#include "ledger/codec.hpp"

namespace brook {

StateDb::StateDb(size_t stripe_count) {
    if (stripe_count == 0 || (stripe_count & (stripe_count - 1)) != 0)
        throw std::invalid_argument("stripe_count must be a power of two");
    stripes_.reserve(stripe_count);
    for (size_t i = 0; i < stripe_count; ++i) stripes_.push_back(std::make_unique<Stripe>());
}

size_t StateDb::stripe_for(const Key& key) const {
    return KeyHash{}(key) & (stripes_.size() - 1);
}

std::optional<StateEntry> StateDb::get(const Key& key) const {
    const Stripe& s = *stripes_[stripe_for(key)];
    std::shared_lock lk(s.mutex);
    auto it = s.entries.find(key);
    if (it == s.entries.end()) return std::nullopt;
    return it->second;
}

bool StateDb::mvcc_check(const std::vector<ReadEntry>& reads) const {
    for (const auto& rd : reads) {
        const Stripe& s = *stripes_[stripe_for(rd.key)];
        std::shared_lock lk(s.mutex);
        auto it = s.entries.find(rd.key);
        Version current = it == s.entries.end() ? kVersionAbsent : it->second.version;
        if (current != rd.version) return false;
    }
    return true;
}

void StateDb::apply_writes(const std::vector<WriteEntry>& writes, uint64_t commit_seq) {
    for (const auto& wr : writes) {
        Stripe& s = *stripes_[stripe_for(wr.key)];
        std::unique_lock lk(s.mutex);
        if (wr.is_delete) {
            s.entries.erase(wr.key);
        } else {
            auto& entry = s.entries[wr.key];
            assert(commit_seq > entry.version);
            entry.value = wr.value;
            entry.version = commit_seq;
        }
    }
    last_applied_seq_.store(commit_seq, std::memory_order_release);
}

bool StateDb::check_and_commit(const ReadWriteSet& rwset, uint64_t commit_seq) {
    // Exclusive-lock every touched stripe in ascending order, then check
    // and apply while holding them all, so no reader can observe a
    // partially applied write set within a stripe.
    std::set<size_t> touched;
    for (const auto& rd : rwset.reads) touched.insert(stripe_for(rd.key));
    for (const auto& wr : rwset.writes) touched.insert(stripe_for(wr.key));

    std::vector<std::unique_lock<std::shared_mutex>> locks;
    locks.reserve(touched.size());
    for (size_t idx : touched) locks.emplace_back(stripes_[idx]->mutex);

    bool valid = true;
    for (const auto& rd : rwset.reads) {
        auto& entries = stripes_[stripe_for(rd.key)]->entries;
        auto it = entries.find(rd.key);
        Version current = it == entries.end() ? kVersionAbsent : it->second.version;
        if (current != rd.version) {
            valid = false;
            break;
        }
    }
    if (valid) {
        for (const auto& wr : rwset.writes) {
            auto& entries = stripes_[stripe_for(wr.key)]->entries;
            if (wr.is_delete) {
                entries.erase(wr.key);
            } else {
                auto& entry = entries[wr.key];
                assert(commit_seq > entry.version);
                entry.value = wr.value;
                entry.version = commit_seq;
            }
        }
    }
    last_applied_seq_.store(commit_seq, std::memory_order_release);
    return valid;
}

std::vector<SnapshotRead> StateDb::snapshot_read(const std::vector<Key>& keys) const {
    // Group by stripe and read stripe-by-stripe in ascending order; each
    // stripe's reads come from one commit boundary.
    std::map<size_t, std::vector<const Key*>> by_stripe;
    for (const auto& k : keys) by_stripe[stripe_for(k)].push_back(&k);

    std::unordered_map<const Key*, SnapshotRead> results;
    for (auto& [idx, stripe_keys] : by_stripe) {
        const Stripe& s = *stripes_[idx];
        std::shared_lock lk(s.mutex);
        for (const Key* k : stripe_keys) {
            SnapshotRead r;
            r.key = *k;
            auto it = s.entries.find(*k);
            if (it != s.entries.end()) {
                r.version = it->second.version;
                r.value = it->second.value;
            }
            results.emplace(k, std::move(r));
        }
    }

    std::vector<SnapshotRead> out;
    out.reserve(keys.size());
    for (const auto& k : keys) out.push_back(std::move(results.at(&k)));
    return out;
}

uint64_t StateDb::last_applied_seq() const {
    return last_applied_seq_.load(std::memory_order_acquire);
}

Hash32 StateDb::digest() const {
    std::map<Key, StateEntry> sorted;
    for (const auto& stripe : stripes_) {
        std::shared_lock lk(stripe->mutex);
        for (const auto& [k, e] : stripe->entries) sorted.emplace(k, e);
    }
    Writer w;
    for (const auto& [k, e] : sorted) {
        write_key(w, k);
        w.u64(e.version);
        w.blob(e.value);
    }
    return sha256(w.bytes());
}

void StateDb::save_checkpoint(const std::filesystem::path& path) const {
    Writer w;
    w.u64(last_applied_seq());
    for (const auto& stripe : stripes_) {
        std::shared_lock lk(stripe->mutex);
        for (const auto& [k, e] : stripe->entries) {
            Writer kw;
            write_key(kw, k);
            w.blob(kw.bytes());
            w.u64(e.version);
            w.blob(e.value);
        }
    }
    // Written atomically via temp-file rename.
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out.write(reinterpret_cast<const char*>(w.bytes().data()),
                  static_cast<std::streamsize>(w.bytes().size()));
        if (!out) throw std::runtime_error("checkpoint write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

void StateDb::load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint open failed: " + path.string());
    Bytes content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Reader r(content);
    uint64_t seq = r.u64();
    while (!r.done()) {
        Bytes key_bytes = r.blob();
        Reader kr(key_bytes);
        Key k = read_key(kr);
        StateEntry e;
        e.version = r.u64();
        e.value = r.blob();
        Stripe& s = *stripes_[stripe_for(k)];
        std::unique_lock lk(s.mutex);
        s.entries[std::move(k)] = std::move(e);
    }
    last_applied_seq_.store(seq, std::memory_order_release);
}

}  // namespace brook
