#pragma once

#include <atomic>
#include <condition_variable>
#include <functional>
#include <map>
#include <mutex>
#include <thread>
#include <vector>

#include "common/bounded_queue.hpp"
#include "crypto/signer.hpp"
#include "endorse/endorser.hpp"
#include "ledger/chain.hpp"
#include "ordering/ordering.hpp"
#include "persist/append_log.hpp"
#include "statedb/state_db.hpp"
#include "validator/deser_cache.hpp"

namespace brook {

struct PipelineConfig {
    int sig_workers = 6;    // 1..32
    size_t queue_capacity = 256;
    DeliveryMode mode = DeliveryMode::kStream;
    size_t deser_cache_capacity = 4096;    // 0 disables the cache
    CryptoMode crypto = CryptoMode::kReal;

    // Test instrumentation: runs on a sig worker before verification, used
    // to inject artificial per-entry delays when exercising the reorder
    // buffer. Leave empty in production.
    std::function<void(uint64_t seq)> stage1_hook;
};

struct CommitEvent {
    uint64_t seq = 0;
    TxId tx_id{};
    bool valid = false;
    int64_t received_ns = 0;
    int64_t verified_ns = 0;
    int64_t committed_ns = 0;
};

// Frame: [u32 len][u64 seq][u8 valid][16-byte tx_id][3x u64 timestamps].
Bytes frame_commit_event(const CommitEvent& ev);
CommitEvent unframe_commit_event(const Bytes& frame);

struct PipelineMetrics {
    std::atomic<uint64_t> committed{0};
    std::atomic<uint64_t> valid{0};
    std::atomic<uint64_t> invalid{0};
    std::atomic<uint64_t> sig_failures{0};
};

// The validating peer's streaming pipeline:
//   intake (caller thread) -> sig worker pool -> reorder buffer ->
//   single commit thread -> housekeeping thread.
// All hand-offs are bounded queues with blocking backpressure. A
// persistence failure halts the pipeline (fail-stop).
class Pipeline {
  public:
    using CommitHandler = std::function<void(const CommitEvent&)>;

    Pipeline(PipelineConfig config, StateDb& db, AppendLog& ledger, EndorsementPolicy policy,
             const IdentityRoster& roster, Bytes client_public_key, uint64_t first_seq = 1);
    ~Pipeline();

    Pipeline(const Pipeline&) = delete;
    Pipeline& operator=(const Pipeline&) = delete;

    // Register before start(); invoked on the housekeeping thread in seq
    // order. A slow handler stalls stage 3 only, until the event queue
    // bound.
    void add_commit_handler(CommitHandler handler);

    void start();

    // Intake, stream mode. Blocks when the verification queue is full.
    void feed(const OrderedEntry& entry);

    // Intake, block mode: one durability flush per block, events emitted
    // only after the flush.
    void feed_block(const Block& block);

    // Drains everything fed so far, then joins all stages.
    void stop();

    bool halted() const { return halted_.load(); }
    uint64_t last_committed_seq() const { return last_committed_.load(); }
    Hash32 chain_head() const;
    const PipelineMetrics& metrics() const { return metrics_; }
    uint64_t cache_hits() const { return cache_.hits(); }
    uint64_t cache_misses() const { return cache_.misses(); }

  private:
    struct WorkItem {
        uint64_t seq = 0;
        Bytes payload;
        std::shared_ptr<const Transaction> tx;    // null: undeserializable
        int64_t received_ns = 0;
        int64_t verified_ns = 0;
        bool sig_ok = false;
        bool end_of_block = false;
    };

    void worker_loop();
    void commit_loop();
    void housekeep_loop();

    void reorder_put(WorkItem item);
    bool reorder_get(WorkItem& out);
    void reorder_close();

    PipelineConfig config_;
    StateDb& db_;
    AppendLog& ledger_;
    EndorsementPolicy policy_;
    const IdentityRoster& roster_;
    Bytes client_public_key_;

    DeserCache cache_;
    BoundedQueue<WorkItem> sig_queue_;
    BoundedQueue<CommitEvent> event_queue_;

    std::mutex reorder_m_;
    std::condition_variable reorder_cv_;
    std::map<uint64_t, WorkItem> reorder_pending_;
    uint64_t reorder_next_;
    bool reorder_closed_ = false;

    Hash32 chain_{};
    mutable std::mutex chain_m_;

    std::vector<std::thread> workers_;
    std::thread commit_thread_;
    std::thread housekeep_thread_;
    std::vector<CommitHandler> handlers_;

    std::atomic<bool> halted_{false};
    std::atomic<uint64_t> last_committed_{0};
    std::atomic<int> stage2_occupancy_{0};
    PipelineMetrics metrics_;
    std::atomic<bool> started_{false};
};

}  // namespace brook
