#include "ordering/raft_service.hpp"

#include <atomic>
#include <chrono>
#include <thread>

#include "common/clock.hpp"
#include "ordering/wire.hpp"

namespace brook {

namespace {
constexpr int kConnectTimeoutMs = 300;
constexpr int kRecvTimeoutMs = 7000;    // longer than a node's submit wait
}  // namespace

RaftOrderingClient::RaftOrderingClient(std::vector<uint16_t> ports, int op_deadline_ms)
    : ports_(std::move(ports)), op_deadline_ms_(op_deadline_ms) {}

RaftOrderingClient::~RaftOrderingClient() = default;

std::unique_ptr<TcpConn> RaftOrderingClient::connect_node(size_t idx) const {
    auto conn = TcpConn::connect("127.0.0.1", ports_[idx], kConnectTimeoutMs);
    if (conn) conn->set_recv_timeout(kRecvTimeoutMs);
    return conn;
}

uint64_t RaftOrderingClient::order(const Bytes& payload) {
    if (payload.empty()) throw std::invalid_argument("empty payload");
    std::lock_guard lk(m_);
    auto deadline = std::chrono::steady_clock::now() +
                    std::chrono::milliseconds(op_deadline_ms_);
    Msg submit;
    submit.type = MsgType::kSubmit;
    submit.payload = payload;

    while (std::chrono::steady_clock::now() < deadline) {
        if (!conn_) {
            conn_ = connect_node(node_idx_);
            if (!conn_) {
                node_idx_ = (node_idx_ + 1) % ports_.size();
                std::this_thread::sleep_for(std::chrono::milliseconds(50));
                continue;
            }
        }
        if (!send_msg(*conn_, submit)) {
            conn_.reset();
            node_idx_ = (node_idx_ + 1) % ports_.size();
            continue;
        }
        auto ack = recv_msg(*conn_);
        if (!ack || ack->type != MsgType::kSubmitAck) {
            conn_.reset();
            node_idx_ = (node_idx_ + 1) % ports_.size();
            continue;
        }
        switch (ack->submit_status) {
            case SubmitStatus::kOk:
                return ack->seq;
            case SubmitStatus::kNotLeader:
                conn_.reset();
                if (ack->leader_hint >= 0 &&
                    static_cast<size_t>(ack->leader_hint) < ports_.size() &&
                    static_cast<size_t>(ack->leader_hint) != node_idx_) {
                    node_idx_ = static_cast<size_t>(ack->leader_hint);
                } else {
                    node_idx_ = (node_idx_ + 1) % ports_.size();
                    std::this_thread::sleep_for(std::chrono::milliseconds(50));
                }
                break;
            case SubmitStatus::kTimeout:
                // Node-side wait expired (election in progress or lost
                // leadership); retry from scratch.
                conn_.reset();
                node_idx_ = (node_idx_ + 1) % ports_.size();
                break;
        }
    }
    throw OrderingTimeout();
}

std::optional<OrderedEntry> RaftOrderingClient::fetch(uint64_t seq, bool wait) {
    std::lock_guard lk(m_);
    auto deadline = std::chrono::steady_clock::now() +
                    std::chrono::milliseconds(op_deadline_ms_);
    Msg req;
    req.type = MsgType::kFetch;
    req.seq = seq;
    req.wait = wait ? 1 : 0;

    size_t attempts = 0;
    while (std::chrono::steady_clock::now() < deadline) {
        if (!conn_) {
            conn_ = connect_node(node_idx_);
            if (!conn_) {
                node_idx_ = (node_idx_ + 1) % ports_.size();
                std::this_thread::sleep_for(std::chrono::milliseconds(50));
                continue;
            }
        }
        if (!send_msg(*conn_, req)) {
            conn_.reset();
            node_idx_ = (node_idx_ + 1) % ports_.size();
            continue;
        }
        auto reply = recv_msg(*conn_);
        if (!reply || reply->type != MsgType::kDeliver) {
            conn_.reset();
            node_idx_ = (node_idx_ + 1) % ports_.size();
            continue;
        }
        if (reply->deliver_status == DeliverStatus::kEntry) {
            OrderedEntry e;
            e.seq = reply->seq;
            e.payload_hash = reply->payload_hash;
            e.payload = std::move(reply->payload);
            return e;
        }
        if (!wait) {
            // A lagging follower may answer not-found for a committed seq:
            // try the other nodes once before giving up.
            if (++attempts >= ports_.size()) return std::nullopt;
            conn_.reset();
            node_idx_ = (node_idx_ + 1) % ports_.size();
            continue;
        }
        // Long poll expired without the entry; ask again.
    }
    return std::nullopt;
}

std::optional<OrderedEntry> RaftOrderingClient::get(uint64_t seq) {
    if (seq == 0) return std::nullopt;
    return fetch(seq, false);
}

std::optional<OrderedEntry> RaftOrderingClient::get_last() {
    return fetch(UINT64_MAX, false);
}

std::optional<OrderedEntry> RaftOrderingClient::get_blocking(uint64_t seq) {
    return fetch(seq, true);
}

namespace {

class RaftStream : public DeliveryStream {
  public:
    // Each poll round uses a short deadline so stop() is honored promptly.
    RaftStream(std::vector<uint16_t> ports, uint64_t from_seq)
        : client_(std::move(ports), 1500), next_seq_(from_seq) {}

    bool next(OrderedEntry& out) override {
        while (!stopped_.load()) {
            auto e = client_.get_blocking(next_seq_);
            if (!e) continue;
            out = std::move(*e);
            ++next_seq_;
            return true;
        }
        return false;
    }

    void stop() override { stopped_.store(true); }

  private:
    RaftOrderingClient client_;
    uint64_t next_seq_;
    std::atomic<bool> stopped_{false};
};

}  // namespace

std::unique_ptr<DeliveryStream> RaftOrderingClient::subscribe(uint64_t from_seq) {
    return std::make_unique<RaftStream>(ports_, from_seq == 0 ? 1 : from_seq);
}

}  // namespace brook
