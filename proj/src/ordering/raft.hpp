#pragma once

#include <atomic>
#include <condition_variable>
#include <filesystem>
#include <memory>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

#include "net/tcp.hpp"
#include "ordering/wire.hpp"
#include "persist/append_log.hpp"

namespace brook {

// Single-leader replicated log with majority acknowledgment and term-based
// leader election. Crash fault tolerant with 2f+1 nodes; desk scale, so the
// full log is retained (no snapshots) and membership is fixed.

struct RaftNodeConfig {
    uint32_t id = 0;
    std::vector<uint16_t> ports;    // ports[i] is node i's listen port
    std::filesystem::path data_dir;
    BatcherConfig batcher;
    int election_timeout_min_ms = 150;
    int election_timeout_max_ms = 300;
    int heartbeat_ms = 50;
    int submit_wait_ms = 5000;
};

class RaftNode {
  public:
    explicit RaftNode(RaftNodeConfig config);
    ~RaftNode();

    RaftNode(const RaftNode&) = delete;
    RaftNode& operator=(const RaftNode&) = delete;

    void start();

    // Clean shutdown: flush logs, close sockets, join threads.
    void stop();

    // Crash simulation: drop all buffered (not yet flushed) log data and
    // tear the node down without any cleanup writes.
    void kill();

    bool is_leader() const;
    uint64_t current_term() const;
    uint64_t commit_seq() const;
    uint64_t last_log_seq() const;
    uint16_t port() const { return config_.ports[config_.id]; }
    uint32_t id() const { return config_.id; }

  private:
    enum class Role { kFollower, kCandidate, kLeader };

    struct PeerLink {
        uint32_t id = 0;
        std::unique_ptr<TcpConn> conn;
        uint64_t next_seq = 1;
        uint64_t match_seq = 0;
        std::thread thread;
    };

    void accept_loop();
    void connection_loop(std::shared_ptr<TcpConn> conn);
    void replication_loop(PeerLink& peer);
    void election_loop();

    Msg handle_append(const Msg& msg);
    Msg handle_vote_request(const Msg& msg);
    void handle_submit(TcpConn& conn, const Msg& msg);
    void handle_fetch(TcpConn& conn, const Msg& msg);

    void run_election();
    void become_follower_locked(uint64_t term);
    void advance_commit_locked();
    void persist_meta_locked();
    void truncate_log_locked(uint64_t new_len);
    void append_entry_to_disk_locked(const RaftLogEntry& e);
    void rewrite_log_files_locked();

    RaftNodeConfig config_;

    mutable std::mutex m_;
    std::condition_variable commit_cv_;     // commit index advanced
    std::condition_variable replicate_cv_;  // new entries / role change
    Role role_ = Role::kFollower;
    uint64_t term_ = 0;
    int32_t voted_for_ = -1;
    int32_t leader_hint_ = -1;
    std::vector<RaftLogEntry> log_;    // log_[i] holds seq i+1
    uint64_t commit_seq_ = 0;
    int64_t last_leader_contact_ns_ = 0;
    std::atomic<bool> running_{false};
    bool dying_abruptly_ = false;

    std::unique_ptr<AppendLog> log_file_;
    std::unique_ptr<AppendLog> term_file_;

    std::unique_ptr<TcpListener> listener_;
    std::thread accept_thread_;
    std::thread election_thread_;
    std::vector<std::unique_ptr<PeerLink>> peers_;
    std::vector<std::thread> conn_threads_;
    std::vector<std::shared_ptr<TcpConn>> open_conns_;
    std::mt19937 rng_;
};

}  // namespace brook
