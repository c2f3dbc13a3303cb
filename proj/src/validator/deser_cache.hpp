#pragma once

#include <list>
#include <memory>
#include <unordered_map>

#include "ledger/codec.hpp"
#include "ledger/types.hpp"

namespace brook {

// Bounded LRU of deserialized transactions keyed by payload hash. Touched
// only by the single intake thread, so no locking. Capacity 0 disables
// caching (every lookup deserializes).
class DeserCache {
  public:
    explicit DeserCache(size_t capacity) : capacity_(capacity) {}

    // Returns nullptr when the payload does not deserialize. Failures are
    // not cached; successful entries are immutable once inserted.
    std::shared_ptr<const Transaction> get(const Hash32& payload_hash, const Bytes& payload) {
        if (capacity_ > 0) {
            auto it = map_.find(payload_hash);
            if (it != map_.end()) {
                ++hits_;
                lru_.splice(lru_.begin(), lru_, it->second.where);
                return it->second.tx;
            }
        }
        ++misses_;
        std::shared_ptr<const Transaction> tx;
        try {
            tx = std::make_shared<const Transaction>(deserialize_tx(payload));
        } catch (const CodecError&) {
            return nullptr;
        }
        if (capacity_ > 0) {
            lru_.push_front(payload_hash);
            map_.emplace(payload_hash, Slot{tx, lru_.begin()});
            if (map_.size() > capacity_) {
                map_.erase(lru_.back());
                lru_.pop_back();
            }
        }
        return tx;
    }

    uint64_t hits() const { return hits_; }
    uint64_t misses() const { return misses_; }
    size_t size() const { return map_.size(); }

  private:
    struct Slot {
        std::shared_ptr<const Transaction> tx;
        std::list<Hash32>::iterator where;
    };

    size_t capacity_;
    std::unordered_map<Hash32, Slot, Hash32Hasher> map_;
    std::list<Hash32> lru_;
    uint64_t hits_ = 0;
    uint64_t misses_ = 0;
};

}  // namespace brook
