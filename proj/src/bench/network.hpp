#pragma once

#include <condition_variable>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "bench/workload.hpp"
#include "chaincode/chaincode.hpp"
#include "endorse/endorser.hpp"
#include "ordering/block_cutter.hpp"
#include "ordering/ordering.hpp"
#include "ordering/raft.hpp"
#include "persist/append_log.hpp"
#include "statedb/state_db.hpp"
#include "validator/pipeline.hpp"

namespace brook {

struct NetworkConfig {
    uint32_t peers = 5;
    uint32_t orderers = 1;    // 1 = single-node ordering, >1 = replicated
    DeliveryMode mode = DeliveryMode::kStream;
    size_t block_size = 10;
    int block_timeout_ms = 1000;
    int sig_workers = 6;
    size_t stripes = 64;
    BatcherConfig batcher;
    CryptoMode crypto = CryptoMode::kReal;
    size_t endorsement_required = 1;
    size_t deser_cache_capacity = 4096;
    size_t queue_capacity = 256;
    std::filesystem::path data_dir;
    uint64_t seed = 1;
    int op_timeout_ms = 10000;
};

// Outcome of one client operation against the network. A chaincode refusal
// never reaches ordering: ok=false with the error set. An ordered
// transaction always commits (possibly invalid).
struct SubmitResult {
    bool ok = false;          // endorsed, ordered, and committed (any validity)
    bool valid = false;
    std::string error;
    uint64_t seq = 0;
    int64_t endorsed_ns = 0;
    int64_t ordered_ns = 0;
    int64_t committed_ns = 0;
    Bytes result;
};

// Everything on one host: endorsing/validating peers, the ordering service,
// and the client API, in a single process (the in-process endorsement path;
// replicated ordering nodes still talk TCP on loopback).
class Network {
  public:
    explicit Network(NetworkConfig config);
    ~Network();

    Network(const Network&) = delete;
    Network& operator=(const Network&) = delete;

    void start();
    void stop();

    SubmitResult submit(const Proposal& proposal, uint32_t client_id);

    // Orders every proposal before waiting for any commit; proposals in one
    // batch must be mutually conflict-free or MVCC will fail some of them.
    std::vector<SubmitResult> submit_batch(const std::vector<Proposal>& proposals,
                                           uint32_t client_id);

    // Split submission for pipelined (open-loop) clients: begin_submit
    // endorses and orders, finish_submit waits for the commit event.
    struct Waiter {
        std::mutex m;
        std::condition_variable cv;
        bool done = false;
        CommitEvent event;
    };
    struct PendingSubmit {
        SubmitResult result;
        std::shared_ptr<Waiter> waiter;
        std::string waiter_key;
        bool ordered = false;
    };
    PendingSubmit begin_submit(const Proposal& proposal, uint32_t client_id);
    SubmitResult finish_submit(PendingSubmit& pending);

    // Runs proposals sequentially; throws on any refusal or invalid commit.
    void bootstrap(const std::vector<Proposal>& proposals);

    // Batched variant: each layer is submitted as one batch.
    void bootstrap_layers(const std::vector<std::vector<Proposal>>& layers);

    size_t peer_count() const { return peers_.size(); }
    StateDb& peer_db(size_t i) { return *peers_[i]->db; }
    Pipeline& peer_pipeline(size_t i) { return *peers_[i]->pipeline; }
    std::filesystem::path peer_ledger_path(size_t i) const;
    std::filesystem::path checkpoint_path(size_t i) const;
    void checkpoint_peer(size_t i);

    OrderingService& ordering() { return *ordering_; }
    RaftNode* raft_node(size_t i) { return i < raft_nodes_.size() ? raft_nodes_[i].get() : nullptr; }

    const EndorsementPolicy& policy() const { return policy_; }
    const IdentityRoster& roster() const { return roster_; }
    const KeyPair& client_keys() const { return client_keys_; }
    const NetworkConfig& config() const { return config_; }

    // Blocks until peer 0 has committed the given seq (or timeout).
    bool wait_for_seq(uint64_t seq, int timeout_ms);

    // Extra commit-event observer for a peer; must be registered before
    // start(). Runs on that peer's housekeeping thread.
    void tap_commits(size_t peer, Pipeline::CommitHandler handler);

  private:
    struct Peer {
        std::string id;
        KeyPair keys;
        std::unique_ptr<StateDb> db;
        std::unique_ptr<AppendLog> ledger;
        std::unique_ptr<Pipeline> pipeline;
        std::unique_ptr<DeliveryStream> stream;
        std::thread delivery_thread;
        std::thread cutter_thread;
        std::unique_ptr<BoundedQueue<OrderedEntry>> cutter_queue;
    };

    void delivery_loop(Peer& peer);
    void cutter_loop(Peer& peer);
    void on_commit(const CommitEvent& ev);
    TxId next_tx_id(uint32_t client_id);

    NetworkConfig config_;
    ChaincodeRegistry registry_;
    EndorsementPolicy policy_;
    IdentityRoster roster_;
    KeyPair client_keys_;

    std::vector<std::unique_ptr<Peer>> peers_;
    std::unique_ptr<OrderingService> ordering_;
    std::vector<std::unique_ptr<RaftNode>> raft_nodes_;

    std::mutex waiters_m_;
    std::unordered_map<std::string, std::shared_ptr<Waiter>> waiters_;    // hex tx_id
    std::condition_variable seq_cv_;
    uint64_t peer0_committed_ = 0;

    std::mutex txid_m_;
    uint64_t txid_counter_ = 0;

    std::vector<std::pair<size_t, Pipeline::CommitHandler>> taps_;

    bool started_ = false;
};

}  // namespace brook
