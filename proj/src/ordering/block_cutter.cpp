#include "ordering/block_cutter.hpp"

namespace brook {

std::optional<Block> BlockCutter::add(OrderedEntry entry, int64_t now_ns) {
    if (pending_.empty()) oldest_ns_ = now_ns;
    pending_.push_back(std::move(entry));
    if (pending_.size() >= block_size_) return cut(CutReason::kSize);
    return std::nullopt;
}

std::optional<Block> BlockCutter::poll(int64_t now_ns) {
    if (pending_.empty()) return std::nullopt;
    auto deadline = oldest_ns_ + std::chrono::nanoseconds(block_timeout_).count();
    if (now_ns < deadline) return std::nullopt;
    return cut(CutReason::kTimeout);
}

std::optional<int64_t> BlockCutter::deadline_ns() const {
    if (pending_.empty()) return std::nullopt;
    return oldest_ns_ + std::chrono::nanoseconds(block_timeout_).count();
}

std::optional<Block> BlockCutter::cut_remaining() {
    if (pending_.empty()) return std::nullopt;
    return cut(CutReason::kTimeout);
}

Block BlockCutter::cut(CutReason reason) {
    Block b;
    b.block_no = next_block_no_++;
    b.entries = std::move(pending_);
    b.cut_reason = reason;
    pending_.clear();
    return b;
}

}  // namespace brook
