#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "common/bytes.hpp"

namespace brook {

struct OrderedEntry {
    uint64_t seq = 0;
    Bytes payload;          // serialized Transaction
    Hash32 payload_hash{};  // SHA256 of payload, computed at the orderer
};

enum class CutReason : uint8_t { kSize, kTimeout };

struct Block {
    uint64_t block_no = 0;
    std::vector<OrderedEntry> entries;
    CutReason cut_reason = CutReason::kSize;
};

enum class DeliveryMode : uint8_t { kStream, kBlock };

class OrderingTimeout : public std::runtime_error {
  public:
    OrderingTimeout() : std::runtime_error("ordering timed out (no quorum reachable)") {}
};

// Blocking, gapless, exactly-once entry stream starting at a subscriber
// chosen sequence number.
class DeliveryStream {
  public:
    virtual ~DeliveryStream() = default;
    // False once the stream is shut down; entries arrive in seq order.
    virtual bool next(OrderedEntry& out) = 0;
    virtual void stop() = 0;
};

class OrderingService {
  public:
    virtual ~OrderingService() = default;

    // Returns the assigned sequence number once the entry is replicated per
    // the service's fault model. Throws OrderingTimeout when no quorum is
    // reachable.
    virtual uint64_t order(const Bytes& payload) = 0;

    virtual std::optional<OrderedEntry> get(uint64_t seq) = 0;
    virtual std::optional<OrderedEntry> get_last() = 0;

    virtual std::unique_ptr<DeliveryStream> subscribe(uint64_t from_seq) = 0;
};

}  // namespace brook
