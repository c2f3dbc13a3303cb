#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <vector>

#include "ordering/ordering.hpp"

namespace brook {

// Groups an ordered entry stream into blocks: a block is cut when pending
// entries reach block_size or the oldest pending entry reaches
// block_timeout. Baseline mode only; stream mode never touches this.
class BlockCutter {
  public:
    BlockCutter(size_t block_size, std::chrono::milliseconds block_timeout)
        : block_size_(block_size), block_timeout_(block_timeout) {}

    // Returns a block when this arrival fills one.
    std::optional<Block> add(OrderedEntry entry, int64_t now_ns);

    // Returns a timeout-cut block when the oldest pending entry has aged
    // out; nullopt otherwise.
    std::optional<Block> poll(int64_t now_ns);

    // Deadline of the pending batch, if any.
    std::optional<int64_t> deadline_ns() const;

    size_t pending() const { return pending_.size(); }

    // Flush whatever is pending (shutdown path).
    std::optional<Block> cut_remaining();

  private:
    Block cut(CutReason reason);

    const size_t block_size_;
    const std::chrono::milliseconds block_timeout_;
    std::vector<OrderedEntry> pending_;
    int64_t oldest_ns_ = 0;
    uint64_t next_block_no_ = 1;
};

}  // namespace brook
