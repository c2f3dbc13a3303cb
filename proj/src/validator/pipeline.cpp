#include "validator/pipeline.hpp"

#include <cassert>
#include <chrono>
#include <thread>

#include "common/clock.hpp"
#include "common/codec.hpp"
#include "ledger/codec.hpp"

namespace brook {

Bytes frame_commit_event(const CommitEvent& ev) {
    Writer w;
    w.u32(8 + 1 + 16 + 24);
    w.u64(ev.seq);
    w.u8(ev.valid ? 1 : 0);
    for (uint8_t b : ev.tx_id) w.u8(b);
    w.u64(static_cast<uint64_t>(ev.received_ns));
    w.u64(static_cast<uint64_t>(ev.verified_ns));
    w.u64(static_cast<uint64_t>(ev.committed_ns));
    return w.take();
}

CommitEvent unframe_commit_event(const Bytes& frame) {
    Reader r(frame);
    uint32_t len = r.u32();
    if (len != 8 + 1 + 16 + 24) throw CodecError("bad commit event length");
    CommitEvent ev;
    ev.seq = r.u64();
    ev.valid = r.u8() != 0;
    for (auto& b : ev.tx_id) b = r.u8();
    ev.received_ns = static_cast<int64_t>(r.u64());
    ev.verified_ns = static_cast<int64_t>(r.u64());
    ev.committed_ns = static_cast<int64_t>(r.u64());
    return ev;
}

Pipeline::Pipeline(PipelineConfig config, StateDb& db, AppendLog& ledger,
                   EndorsementPolicy policy, const IdentityRoster& roster,
                   Bytes client_public_key, uint64_t first_seq)
    : config_(config),
      db_(db),
      ledger_(ledger),
      policy_(std::move(policy)),
      roster_(roster),
      client_public_key_(std::move(client_public_key)),
      cache_(config.deser_cache_capacity),
      sig_queue_(config.queue_capacity),
      event_queue_(config.queue_capacity),
      reorder_next_(first_seq),
      chain_(genesis_hash()) {
    if (config_.sig_workers < 1 || config_.sig_workers > 32)
        throw std::invalid_argument("sig_workers out of range");
    if (config_.queue_capacity < static_cast<size_t>(config_.sig_workers))
        throw std::invalid_argument("queue_capacity < sig_workers");
}

Pipeline::~Pipeline() {
    if (started_) stop();
}

void Pipeline::add_commit_handler(CommitHandler handler) {
    handlers_.push_back(std::move(handler));
}

void Pipeline::start() {
    started_ = true;
    for (int i = 0; i < config_.sig_workers; ++i)
        workers_.emplace_back(&Pipeline::worker_loop, this);
    commit_thread_ = std::thread(&Pipeline::commit_loop, this);
    housekeep_thread_ = std::thread(&Pipeline::housekeep_loop, this);
}

void Pipeline::feed(const OrderedEntry& entry) {
    WorkItem item;
    item.seq = entry.seq;
    item.received_ns = now_ns();
    item.payload = entry.payload;
    item.tx = cache_.get(entry.payload_hash, entry.payload);
    item.end_of_block = false;
    sig_queue_.push(std::move(item));
}

void Pipeline::feed_block(const Block& block) {
    if (block.entries.empty()) return;
    for (size_t i = 0; i < block.entries.size(); ++i) {
        const auto& entry = block.entries[i];
        WorkItem item;
        item.seq = entry.seq;
        item.received_ns = now_ns();
        item.payload = entry.payload;
        item.tx = cache_.get(entry.payload_hash, entry.payload);
        item.end_of_block = i + 1 == block.entries.size();
        sig_queue_.push(std::move(item));
    }
    // Baseline semantics: signature checks run in parallel within a block
    // only, so the next block is not handed over until this one is fully
    // committed and flushed.
    uint64_t last = block.entries.back().seq;
    while (last_committed_.load() < last && !halted_.load() && started_)
        std::this_thread::sleep_for(std::chrono::microseconds(20));
}

void Pipeline::stop() {
    if (!started_) return;
    started_ = false;
    sig_queue_.close();
    for (auto& w : workers_) w.join();
    workers_.clear();
    reorder_close();
    if (commit_thread_.joinable()) commit_thread_.join();
    event_queue_.close();
    if (housekeep_thread_.joinable()) housekeep_thread_.join();
}

Hash32 Pipeline::chain_head() const {
    std::lock_guard lk(chain_m_);
    return chain_;
}

void Pipeline::worker_loop() {
    while (auto item = sig_queue_.pop()) {
        if (config_.stage1_hook) config_.stage1_hook(item->seq);
        item->sig_ok = item->tx && verify_endorsement(*item->tx, policy_, roster_,
                                                      config_.crypto, client_public_key_);
        item->verified_ns = now_ns();
        if (!item->sig_ok) metrics_.sig_failures.fetch_add(1);
        reorder_put(std::move(*item));
    }
}

void Pipeline::reorder_put(WorkItem item) {
    std::unique_lock lk(reorder_m_);
    // The item carrying the next expected seq is always admitted, otherwise
    // a full buffer would deadlock the pipeline.
    reorder_cv_.wait(lk, [&] {
        return reorder_closed_ || item.seq == reorder_next_ ||
               reorder_pending_.size() < config_.queue_capacity;
    });
    if (reorder_closed_) return;
    reorder_pending_.emplace(item.seq, std::move(item));
    reorder_cv_.notify_all();
}

bool Pipeline::reorder_get(WorkItem& out) {
    std::unique_lock lk(reorder_m_);
    reorder_cv_.wait(lk, [&] {
        return reorder_closed_ || (!reorder_pending_.empty() &&
                                   reorder_pending_.begin()->first == reorder_next_);
    });
    auto it = reorder_pending_.begin();
    if (it == reorder_pending_.end() || it->first != reorder_next_) return false;
    out = std::move(it->second);
    reorder_pending_.erase(it);
    ++reorder_next_;
    reorder_cv_.notify_all();
    return true;
}

void Pipeline::reorder_close() {
    std::lock_guard lk(reorder_m_);
    reorder_closed_ = true;
    reorder_cv_.notify_all();
}

void Pipeline::commit_loop() {
    std::vector<CommitEvent> block_pending;    // block mode: emitted after the flush
    WorkItem item;
    while (reorder_get(item)) {
        int occupancy = stage2_occupancy_.fetch_add(1);
        assert(occupancy == 0);
        (void)occupancy;
        CommitEvent ev;
        ev.seq = item.seq;
        ev.received_ns = item.received_ns;
        ev.verified_ns = item.verified_ns;
        if (item.tx) ev.tx_id = item.tx->tx_id;

        bool valid = item.sig_ok && item.tx && db_.check_and_commit(item.tx->rwset, item.seq);
        ev.valid = valid;

        LedgerRecord rec;
        rec.seq = item.seq;
        rec.valid = valid;
        rec.tx_bytes = std::move(item.payload);
        {
            std::lock_guard clk(chain_m_);
            chain_ = chain_hash_fn(chain_, rec.tx_bytes);
            rec.chain_hash = chain_;
        }
        try {
            ledger_.append(frame_record(rec));
            if (config_.mode == DeliveryMode::kBlock) {
                block_pending.push_back(ev);
                if (item.end_of_block) {
                    ledger_.flush();
                    int64_t t = now_ns();
                    for (auto& bev : block_pending) {
                        bev.committed_ns = t;
                        last_committed_.store(bev.seq);
                        event_queue_.push(bev);
                    }
                    block_pending.clear();
                }
            } else {
                ev.committed_ns = now_ns();
                last_committed_.store(ev.seq);
                event_queue_.push(ev);
            }
        } catch (const std::exception&) {
            // Fail-stop: divergence is worse than unavailability.
            halted_.store(true);
            stage2_occupancy_.fetch_sub(1);
            return;
        }
        metrics_.committed.fetch_add(1);
        if (valid)
            metrics_.valid.fetch_add(1);
        else
            metrics_.invalid.fetch_add(1);
        stage2_occupancy_.fetch_sub(1);
    }
    // Shutdown mid-block: flush and release what was committed.
    if (!block_pending.empty()) {
        try {
            ledger_.flush();
        } catch (const std::exception&) {
            halted_.store(true);
            return;
        }
        int64_t t = now_ns();
        for (auto& bev : block_pending) {
            bev.committed_ns = t;
            last_committed_.store(bev.seq);
            event_queue_.push(bev);
        }
    }
}

void Pipeline::housekeep_loop() {
    while (auto ev = event_queue_.pop()) {
        for (auto& h : handlers_) h(*ev);
    }
}

}  // namespace brook
