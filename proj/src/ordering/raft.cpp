#include "ordering/raft.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cstring>
#include <fstream>

#include "common/clock.hpp"
#include "common/codec.hpp"
#include "common/sha256.hpp"
#include "ledger/codec.hpp"

namespace brook {

namespace {

constexpr const char* kLogFile = "orderer.dat";
constexpr const char* kTermFile = "terms.dat";
constexpr const char* kMetaFile = "raft.meta";
constexpr size_t kMaxEntriesPerAppend = 256;
constexpr int kRpcTimeoutMs = 500;
constexpr int kVoteTimeoutMs = 200;
constexpr int kFetchWaitMs = 1000;

}  // namespace

RaftNode::RaftNode(RaftNodeConfig config)
    : config_(std::move(config)),
      rng_(static_cast<uint32_t>(now_ns() ^ (config_.id * 0x9e3779b9u))) {
    std::filesystem::create_directories(config_.data_dir);

    // Recover persistent state: meta (term, vote), payload log, term sidecar.
    auto meta_path = config_.data_dir / kMetaFile;
    if (std::filesystem::exists(meta_path)) {
        std::ifstream in(meta_path, std::ios::binary);
        Bytes content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        if (content.size() >= 12) {
            Reader r(content);
            term_ = r.u64();
            voted_for_ = static_cast<int32_t>(r.u32()) - 1;
        }
    }

    auto payload_bodies = AppendLog::recover(config_.data_dir / kLogFile);
    auto term_bodies = AppendLog::recover(config_.data_dir / kTermFile);
    size_t n = std::min(payload_bodies.size(), term_bodies.size());
    for (size_t i = 0; i < n; ++i) {
        LedgerRecord rec = unframe_record(payload_bodies[i]);
        Reader tr(term_bodies[i]);
        uint64_t seq = tr.u64();
        uint64_t term = tr.u64();
        if (seq != rec.seq) break;    // sidecar out of step: keep the shorter prefix
        RaftLogEntry e;
        e.seq = rec.seq;
        e.term = term;
        e.payload_hash = rec.chain_hash;
        e.payload = std::move(rec.tx_bytes);
        log_.push_back(std::move(e));
    }

    log_file_ = std::make_unique<AppendLog>(config_.data_dir / kLogFile, config_.batcher);
    term_file_ = std::make_unique<AppendLog>(config_.data_dir / kTermFile, config_.batcher);
    // If recovery dropped a suffix, bring the files in line with memory.
    if (log_.size() < payload_bodies.size() || log_.size() < term_bodies.size())
        rewrite_log_files_locked();
}

RaftNode::~RaftNode() {
    if (running_.load()) stop();
}

void RaftNode::start() {
    listener_ = std::make_unique<TcpListener>(config_.ports[config_.id]);
    running_.store(true);
    last_leader_contact_ns_ = now_ns();
    for (uint32_t i = 0; i < config_.ports.size(); ++i) {
        if (i == config_.id) continue;
        auto link = std::make_unique<PeerLink>();
        link->id = i;
        peers_.push_back(std::move(link));
    }
    for (auto& p : peers_) p->thread = std::thread(&RaftNode::replication_loop, this, std::ref(*p));
    accept_thread_ = std::thread(&RaftNode::accept_loop, this);
    election_thread_ = std::thread(&RaftNode::election_loop, this);
}

void RaftNode::stop() {
    {
        std::lock_guard lk(m_);
        if (!running_.load()) return;
        running_.store(false);
        commit_cv_.notify_all();
        replicate_cv_.notify_all();
        if (listener_) listener_->close();
        for (auto& c : open_conns_) c->shutdown();
        for (auto& p : peers_)
            if (p->conn) p->conn->shutdown();
    }
    if (accept_thread_.joinable()) accept_thread_.join();
    if (election_thread_.joinable()) election_thread_.join();
    for (auto& p : peers_)
        if (p->thread.joinable()) p->thread.join();
    for (auto& t : conn_threads_)
        if (t.joinable()) t.join();
    conn_threads_.clear();
    open_conns_.clear();
    if (dying_abruptly_) {
        log_file_->abandon();
        term_file_->abandon();
    } else {
        log_file_->close();
        term_file_->close();
    }
}

void RaftNode::kill() {
    {
        std::lock_guard lk(m_);
        dying_abruptly_ = true;
    }
    stop();
}

bool RaftNode::is_leader() const {
    std::lock_guard lk(m_);
    return role_ == Role::kLeader;
}

uint64_t RaftNode::current_term() const {
    std::lock_guard lk(m_);
    return term_;
}

uint64_t RaftNode::commit_seq() const {
    std::lock_guard lk(m_);
    return commit_seq_;
}

uint64_t RaftNode::last_log_seq() const {
    std::lock_guard lk(m_);
    return log_.size();
}

void RaftNode::accept_loop() {
    while (running_.load()) {
        auto conn = listener_->accept();
        if (!conn) break;
        std::shared_ptr<TcpConn> shared = std::move(conn);
        std::lock_guard lk(m_);
        if (!running_.load()) break;
        open_conns_.push_back(shared);
        conn_threads_.emplace_back(&RaftNode::connection_loop, this, shared);
    }
}

void RaftNode::connection_loop(std::shared_ptr<TcpConn> conn) {
    while (running_.load()) {
        auto msg = recv_msg(*conn);
        if (!msg) break;
        switch (msg->type) {
            case MsgType::kAppend: {
                Msg reply = handle_append(*msg);
                if (!send_msg(*conn, reply)) return;
                break;
            }
            case MsgType::kVoteReq: {
                Msg reply = handle_vote_request(*msg);
                if (!send_msg(*conn, reply)) return;
                break;
            }
            case MsgType::kSubmit:
                handle_submit(*conn, *msg);
                break;
            case MsgType::kFetch:
                handle_fetch(*conn, *msg);
                break;
            default:
                break;
        }
    }
}

Msg RaftNode::handle_append(const Msg& msg) {
    std::unique_lock lk(m_);
    Msg ack;
    ack.type = MsgType::kAppendAck;
    ack.node_id = config_.id;

    if (msg.term < term_) {
        ack.term = term_;
        ack.success = 0;
        ack.match_seq = log_.size();
        return ack;
    }
    if (msg.term > term_) become_follower_locked(msg.term);
    role_ = Role::kFollower;
    leader_hint_ = static_cast<int32_t>(msg.node_id);
    last_leader_contact_ns_ = now_ns();
    ack.term = term_;

    // Consistency check on the entry preceding the batch.
    if (msg.prev_seq > log_.size() ||
        (msg.prev_seq > 0 && log_[msg.prev_seq - 1].term != msg.prev_term)) {
        ack.success = 0;
        ack.match_seq = std::min<uint64_t>(log_.size(), msg.prev_seq > 0 ? msg.prev_seq - 1 : 0);
        return ack;
    }

    for (const auto& e : msg.entries) {
        if (e.seq <= log_.size()) {
            if (log_[e.seq - 1].term == e.term) continue;    // already have it
            truncate_log_locked(e.seq - 1);
        }
        log_.push_back(e);
        append_entry_to_disk_locked(e);
    }

    uint64_t new_commit = std::min<uint64_t>(msg.commit_seq, log_.size());
    if (new_commit > commit_seq_) {
        commit_seq_ = new_commit;
        commit_cv_.notify_all();
    }
    ack.success = 1;
    ack.match_seq = msg.prev_seq + msg.entries.size();
    return ack;
}

Msg RaftNode::handle_vote_request(const Msg& msg) {
    std::unique_lock lk(m_);
    Msg resp;
    resp.type = MsgType::kVoteResp;
    resp.node_id = config_.id;

    if (msg.term > term_) become_follower_locked(msg.term);
    resp.term = term_;

    uint64_t last_seq = log_.size();
    uint64_t last_term = log_.empty() ? 0 : log_.back().term;
    bool up_to_date =
        msg.prev_term > last_term || (msg.prev_term == last_term && msg.prev_seq >= last_seq);
    bool can_vote = msg.term == term_ &&
                    (voted_for_ == -1 || voted_for_ == static_cast<int32_t>(msg.node_id));
    if (can_vote && up_to_date) {
        voted_for_ = static_cast<int32_t>(msg.node_id);
        persist_meta_locked();
        last_leader_contact_ns_ = now_ns();
        resp.success = 1;
    } else {
        resp.success = 0;
    }
    return resp;
}

void RaftNode::handle_submit(TcpConn& conn, const Msg& msg) {
    Msg ack;
    ack.type = MsgType::kSubmitAck;

    std::unique_lock lk(m_);
    if (role_ != Role::kLeader) {
        ack.submit_status = SubmitStatus::kNotLeader;
        ack.leader_hint = leader_hint_;
        lk.unlock();
        send_msg(conn, ack);
        return;
    }

    RaftLogEntry e;
    e.seq = log_.size() + 1;
    e.term = term_;
    e.payload_hash = sha256(msg.payload);
    e.payload = msg.payload;
    log_.push_back(e);
    append_entry_to_disk_locked(e);
    replicate_cv_.notify_all();

    uint64_t seq = e.seq;
    uint64_t submit_term = e.term;
    auto deadline = std::chrono::steady_clock::now() +
                    std::chrono::milliseconds(config_.submit_wait_ms);
    bool committed = commit_cv_.wait_until(lk, deadline, [&] {
        if (!running_.load()) return true;
        if (log_.size() < seq || log_[seq - 1].term != submit_term) return true;    // lost
        return commit_seq_ >= seq;
    });
    bool ok = committed && running_.load() && log_.size() >= seq &&
              log_[seq - 1].term == submit_term && commit_seq_ >= seq;
    ack.submit_status = ok ? SubmitStatus::kOk : SubmitStatus::kTimeout;
    ack.seq = seq;
    ack.leader_hint = leader_hint_;
    lk.unlock();
    send_msg(conn, ack);
}

void RaftNode::handle_fetch(TcpConn& conn, const Msg& msg) {
    Msg reply;
    reply.type = MsgType::kDeliver;

    std::unique_lock lk(m_);
    uint64_t seq = msg.seq;
    if (seq == UINT64_MAX) seq = commit_seq_;    // latest committed
    if (msg.wait && seq > 0) {
        auto deadline =
            std::chrono::steady_clock::now() + std::chrono::milliseconds(kFetchWaitMs);
        commit_cv_.wait_until(lk, deadline,
                              [&] { return !running_.load() || commit_seq_ >= seq; });
    }
    if (seq == 0 || seq > commit_seq_) {
        reply.deliver_status = DeliverStatus::kNotFound;
    } else {
        const RaftLogEntry& e = log_[seq - 1];
        reply.deliver_status = DeliverStatus::kEntry;
        reply.seq = e.seq;
        reply.payload_hash = e.payload_hash;
        reply.payload = e.payload;
    }
    lk.unlock();
    send_msg(conn, reply);
}

void RaftNode::replication_loop(PeerLink& peer) {
    while (running_.load()) {
        Msg append;
        {
            std::unique_lock lk(m_);
            replicate_cv_.wait_for(lk, std::chrono::milliseconds(config_.heartbeat_ms), [&] {
                return !running_.load() ||
                       (role_ == Role::kLeader && log_.size() >= peer.next_seq);
            });
            if (!running_.load()) return;
            if (role_ != Role::kLeader) continue;

            append.type = MsgType::kAppend;
            append.term = term_;
            append.node_id = config_.id;
            append.prev_seq = peer.next_seq - 1;
            append.prev_term = append.prev_seq == 0 ? 0 : log_[append.prev_seq - 1].term;
            append.commit_seq = commit_seq_;
            for (uint64_t s = peer.next_seq;
                 s <= log_.size() && append.entries.size() < kMaxEntriesPerAppend; ++s)
                append.entries.push_back(log_[s - 1]);
        }

        if (!peer.conn) {
            peer.conn = TcpConn::connect("127.0.0.1", config_.ports[peer.id], 200);
            if (!peer.conn) {
                std::this_thread::sleep_for(std::chrono::milliseconds(20));
                continue;
            }
            peer.conn->set_recv_timeout(kRpcTimeoutMs);
        }
        if (!send_msg(*peer.conn, append)) {
            peer.conn.reset();
            continue;
        }
        auto ack = recv_msg(*peer.conn);
        if (!ack || ack->type != MsgType::kAppendAck) {
            peer.conn.reset();
            continue;
        }

        std::unique_lock lk(m_);
        if (ack->term > term_) {
            become_follower_locked(ack->term);
            continue;
        }
        if (role_ != Role::kLeader || ack->term != term_) continue;
        if (ack->success) {
            peer.match_seq = append.prev_seq + append.entries.size();
            peer.next_seq = peer.match_seq + 1;
            advance_commit_locked();
        } else {
            peer.next_seq = std::max<uint64_t>(1, std::min(peer.next_seq - 1, ack->match_seq + 1));
        }
    }
}

void RaftNode::election_loop() {
    std::uniform_int_distribution<int> jitter(config_.election_timeout_min_ms,
                                              config_.election_timeout_max_ms);
    int timeout_ms = jitter(rng_);
    while (running_.load()) {
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
        std::unique_lock lk(m_);
        if (!running_.load()) return;
        if (role_ == Role::kLeader) continue;
        if (now_ns() - last_leader_contact_ns_ < timeout_ms * 1'000'000ll) continue;
        lk.unlock();
        run_election();
        timeout_ms = jitter(rng_);
    }
}

void RaftNode::run_election() {
    uint64_t election_term;
    Msg req;
    {
        std::lock_guard lk(m_);
        role_ = Role::kCandidate;
        ++term_;
        voted_for_ = static_cast<int32_t>(config_.id);
        persist_meta_locked();
        election_term = term_;
        req.type = MsgType::kVoteReq;
        req.term = term_;
        req.node_id = config_.id;
        req.prev_seq = log_.size();
        req.prev_term = log_.empty() ? 0 : log_.back().term;
        last_leader_contact_ns_ = now_ns();
    }

    std::atomic<int> votes{1};    // self
    std::atomic<uint64_t> higher_term{0};
    std::vector<std::thread> askers;
    for (auto& p : peers_) {
        askers.emplace_back([&, peer_id = p->id] {
            auto conn = TcpConn::connect("127.0.0.1", config_.ports[peer_id], kVoteTimeoutMs);
            if (!conn) return;
            conn->set_recv_timeout(kVoteTimeoutMs);
            if (!send_msg(*conn, req)) return;
            auto resp = recv_msg(*conn);
            if (!resp || resp->type != MsgType::kVoteResp) return;
            if (resp->term > election_term) higher_term.store(resp->term);
            else if (resp->success) votes.fetch_add(1);
        });
    }
    for (auto& t : askers) t.join();

    std::lock_guard lk(m_);
    if (higher_term.load() > term_) {
        become_follower_locked(higher_term.load());
        return;
    }
    if (term_ != election_term || role_ != Role::kCandidate) return;
    size_t majority = config_.ports.size() / 2 + 1;
    if (static_cast<size_t>(votes.load()) >= majority) {
        role_ = Role::kLeader;
        leader_hint_ = static_cast<int32_t>(config_.id);
        for (auto& p : peers_) {
            p->next_seq = log_.size() + 1;
            p->match_seq = 0;
        }
        replicate_cv_.notify_all();    // immediate heartbeat
    }
}

void RaftNode::become_follower_locked(uint64_t term) {
    term_ = term;
    role_ = Role::kFollower;
    voted_for_ = -1;
    persist_meta_locked();
    commit_cv_.notify_all();
}

void RaftNode::advance_commit_locked() {
    // Largest seq replicated on a majority whose entry is from the current
    // term.
    std::vector<uint64_t> matches;
    matches.push_back(log_.size());    // self
    for (auto& p : peers_) matches.push_back(p->match_seq);
    std::sort(matches.begin(), matches.end(), std::greater<>());
    uint64_t candidate = matches[config_.ports.size() / 2];
    if (candidate > commit_seq_ && candidate > 0 && log_[candidate - 1].term == term_) {
        commit_seq_ = candidate;
        commit_cv_.notify_all();
    }
}

void RaftNode::persist_meta_locked() {
    Writer w;
    w.u64(term_);
    w.u32(static_cast<uint32_t>(voted_for_ + 1));
    auto tmp = config_.data_dir / (std::string(kMetaFile) + ".tmp");
    int fd = ::open(tmp.c_str(), O_CREAT | O_WRONLY | O_TRUNC, 0644);
    if (fd < 0) return;
    ssize_t rc = ::write(fd, w.bytes().data(), w.bytes().size());
    (void)rc;
    ::fsync(fd);
    ::close(fd);
    std::error_code ec;
    std::filesystem::rename(tmp, config_.data_dir / kMetaFile, ec);
}

void RaftNode::truncate_log_locked(uint64_t new_len) {
    log_.resize(new_len);
    rewrite_log_files_locked();
}

void RaftNode::append_entry_to_disk_locked(const RaftLogEntry& e) {
    LedgerRecord rec;
    rec.seq = e.seq;
    rec.valid = true;
    rec.chain_hash = e.payload_hash;
    rec.tx_bytes = e.payload;
    log_file_->append(frame_record(rec));
    Writer tw;
    tw.u32(16);
    tw.u64(e.seq);
    tw.u64(e.term);
    term_file_->append(tw.take());
}

void RaftNode::rewrite_log_files_locked() {
    // Conflict truncation is rare at desk scale: rewrite both files from
    // memory.
    auto batcher = config_.batcher;
    log_file_->close();
    term_file_->close();
    std::filesystem::remove(config_.data_dir / kLogFile);
    std::filesystem::remove(config_.data_dir / kTermFile);
    log_file_ = std::make_unique<AppendLog>(config_.data_dir / kLogFile, batcher);
    term_file_ = std::make_unique<AppendLog>(config_.data_dir / kTermFile, batcher);
    for (const auto& e : log_) append_entry_to_disk_locked(e);
}

}  // namespace brook
