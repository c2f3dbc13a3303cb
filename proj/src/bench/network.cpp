#include "bench/network.hpp"

#include <algorithm>
#include <chrono>

#include "common/clock.hpp"
#include "common/sha256.hpp"
#include "ledger/codec.hpp"
#include "ordering/raft_service.hpp"
#include "ordering/solo.hpp"

namespace brook {

namespace {

std::vector<uint16_t> pick_free_ports(size_t n) {
    // Hold all listeners open while picking so the ports are distinct;
    // they are released just before the nodes bind them.
    std::vector<std::unique_ptr<TcpListener>> holders;
    std::vector<uint16_t> ports;
    for (size_t i = 0; i < n; ++i) {
        holders.push_back(std::make_unique<TcpListener>(0));
        ports.push_back(holders.back()->port());
    }
    return ports;
}

}  // namespace

Network::Network(NetworkConfig config) : config_(std::move(config)) {
    if (config_.peers < 1) throw std::invalid_argument("need at least one peer");
    if (config_.endorsement_required < 1 || config_.endorsement_required > config_.peers)
        throw std::invalid_argument("endorsement_required out of range");
    registry_.install(make_kv_chaincode());
    registry_.install(make_scm_chaincode());

    client_keys_ = KeyPair::generate(config_.seed, "client");
    for (uint32_t i = 0; i < config_.peers; ++i) {
        auto peer = std::make_unique<Peer>();
        peer->id = "peer" + std::to_string(i);
        peer->keys = KeyPair::generate(config_.seed, peer->id);
        peer->db = std::make_unique<StateDb>(config_.stripes);
        roster_.add(peer->id, peer->keys.public_key);
        policy_.endorsers.insert(peer->id);
        peers_.push_back(std::move(peer));
    }
    policy_.required = config_.endorsement_required;
}

Network::~Network() {
    if (started_) stop();
}

std::filesystem::path Network::peer_ledger_path(size_t i) const {
    return config_.data_dir / ("peer" + std::to_string(i)) / "ledger.dat";
}

std::filesystem::path Network::checkpoint_path(size_t i) const {
    return config_.data_dir / ("peer" + std::to_string(i)) / "state.ckpt";
}

void Network::checkpoint_peer(size_t i) {
    peers_[i]->db->save_checkpoint(checkpoint_path(i));
}

void Network::start() {
    std::filesystem::create_directories(config_.data_dir);

    if (config_.orderers <= 1) {
        ordering_ = std::make_unique<SoloOrderer>(config_.data_dir / "orderer0", config_.batcher);
    } else {
        auto ports = pick_free_ports(config_.orderers);
        for (uint32_t i = 0; i < config_.orderers; ++i) {
            RaftNodeConfig rc;
            rc.id = i;
            rc.ports = ports;
            rc.data_dir = config_.data_dir / ("orderer" + std::to_string(i));
            rc.batcher = config_.batcher;
            raft_nodes_.push_back(std::make_unique<RaftNode>(rc));
        }
        for (auto& node : raft_nodes_) node->start();
        ordering_ = std::make_unique<RaftOrderingClient>(ports, config_.op_timeout_ms);
    }

    for (size_t i = 0; i < peers_.size(); ++i) {
        auto& peer = *peers_[i];
        std::filesystem::create_directories(config_.data_dir / ("peer" + std::to_string(i)));

        PipelineConfig pc;
        pc.sig_workers = config_.sig_workers;
        pc.queue_capacity = config_.queue_capacity;
        pc.mode = config_.mode;
        pc.deser_cache_capacity = config_.deser_cache_capacity;
        pc.crypto = config_.crypto;

        peer.ledger = std::make_unique<AppendLog>(peer_ledger_path(i), config_.batcher);
        peer.pipeline = std::make_unique<Pipeline>(pc, *peer.db, *peer.ledger, policy_, roster_,
                                                   client_keys_.public_key);
        if (i == 0) peer.pipeline->add_commit_handler([this](const CommitEvent& ev) { on_commit(ev); });
        for (auto& [peer_idx, handler] : taps_)
            if (peer_idx == i) peer.pipeline->add_commit_handler(handler);
        peer.pipeline->start();

        peer.stream = ordering_->subscribe(1);
        if (config_.mode == DeliveryMode::kBlock) {
            peer.cutter_queue = std::make_unique<BoundedQueue<OrderedEntry>>(1024);
            peer.cutter_thread = std::thread(&Network::cutter_loop, this, std::ref(peer));
        }
        peer.delivery_thread = std::thread(&Network::delivery_loop, this, std::ref(peer));
    }
    started_ = true;
}

void Network::delivery_loop(Peer& peer) {
    OrderedEntry entry;
    while (peer.stream->next(entry)) {
        if (config_.mode == DeliveryMode::kBlock) {
            if (!peer.cutter_queue->push(std::move(entry))) break;
        } else {
            peer.pipeline->feed(entry);
        }
    }
    if (peer.cutter_queue) peer.cutter_queue->close();
}

void Network::cutter_loop(Peer& peer) {
    BlockCutter cutter(config_.block_size, std::chrono::milliseconds(config_.block_timeout_ms));
    for (;;) {
        int wait_ms = 10;
        if (auto deadline = cutter.deadline_ns()) {
            int64_t left_ms = (*deadline - now_ns()) / 1'000'000;
            wait_ms = static_cast<int>(std::clamp<int64_t>(left_ms, 1, 10));
        }
        auto entry = peer.cutter_queue->pop_for(wait_ms);
        std::optional<Block> block;
        if (entry) {
            block = cutter.add(std::move(*entry), now_ns());
        } else {
            if (peer.cutter_queue->is_closed() && peer.cutter_queue->size() == 0) break;
            block = cutter.poll(now_ns());
        }
        if (block) peer.pipeline->feed_block(*block);
    }
    if (auto block = cutter.cut_remaining()) peer.pipeline->feed_block(*block);
}

void Network::stop() {
    if (!started_) return;
    started_ = false;

    for (auto& peer : peers_) peer->stream->stop();
    if (auto* solo = dynamic_cast<SoloOrderer*>(ordering_.get())) solo->shutdown();
    for (auto& peer : peers_) {
        if (peer->delivery_thread.joinable()) peer->delivery_thread.join();
        if (peer->cutter_thread.joinable()) peer->cutter_thread.join();
        peer->pipeline->stop();
        peer->ledger->close();
    }
    for (auto& node : raft_nodes_) node->stop();
    raft_nodes_.clear();
    ordering_.reset();
}

TxId Network::next_tx_id(uint32_t client_id) {
    uint64_t n;
    {
        std::lock_guard lk(txid_m_);
        n = ++txid_counter_;
    }
    Bytes material;
    for (int i = 0; i < 8; ++i) material.push_back(static_cast<uint8_t>(config_.seed >> (8 * i)));
    for (int i = 0; i < 4; ++i) material.push_back(static_cast<uint8_t>(client_id >> (8 * i)));
    for (int i = 0; i < 8; ++i) material.push_back(static_cast<uint8_t>(n >> (8 * i)));
    Hash32 h = sha256(material);
    TxId id{};
    std::copy(h.begin(), h.begin() + id.size(), id.begin());
    return id;
}

void Network::on_commit(const CommitEvent& ev) {
    std::shared_ptr<Waiter> waiter;
    {
        std::lock_guard lk(waiters_m_);
        peer0_committed_ = ev.seq;
        seq_cv_.notify_all();
        auto it = waiters_.find(to_hex(Bytes(ev.tx_id.begin(), ev.tx_id.end())));
        if (it != waiters_.end()) {
            waiter = it->second;
            waiters_.erase(it);
        }
    }
    if (waiter) {
        std::lock_guard lk(waiter->m);
        waiter->done = true;
        waiter->event = ev;
        waiter->cv.notify_all();
    }
}

bool Network::wait_for_seq(uint64_t seq, int timeout_ms) {
    std::unique_lock lk(waiters_m_);
    return seq_cv_.wait_for(lk, std::chrono::milliseconds(timeout_ms),
                            [&] { return peer0_committed_ >= seq; });
}

SubmitResult Network::submit(const Proposal& proposal, uint32_t client_id) {
    auto pending = begin_submit(proposal, client_id);
    return finish_submit(pending);
}

std::vector<SubmitResult> Network::submit_batch(const std::vector<Proposal>& proposals,
                                                uint32_t client_id) {
    std::vector<PendingSubmit> pendings;
    pendings.reserve(proposals.size());
    for (const auto& p : proposals) pendings.push_back(begin_submit(p, client_id));
    std::vector<SubmitResult> results;
    results.reserve(pendings.size());
    for (auto& pending : pendings) results.push_back(finish_submit(pending));
    return results;
}

Network::PendingSubmit Network::begin_submit(const Proposal& proposal, uint32_t client_id) {
    PendingSubmit pending;
    SubmitResult& result = pending.result;

    // Endorse at the first `required` policy peers; divergence between
    // their views is retry-able.
    std::vector<EndorsementResponse> responses;
    AssemblyResult assembled;
    TxId tx_id = next_tx_id(client_id);
    Proposal p = proposal;
    if (p.client_id.empty()) p.client_id = "client" + std::to_string(client_id);

    for (int attempt = 0; attempt < 3; ++attempt) {
        responses.clear();
        for (size_t i = 0; i < config_.endorsement_required; ++i) {
            auto& peer = *peers_[i];
            StateDbReader reader(*peer.db);
            EndorserIdentity identity{peer.id, peer.keys};
            auto resp = endorse(identity, config_.crypto, registry_, reader, p);
            if (!resp.ok) {
                result.error = resp.error;
                return pending;
            }
            responses.push_back(std::move(resp));
        }
        assembled = assemble_tx(p, responses, policy_, config_.crypto, client_keys_.secret_key,
                                tx_id, wall_ns());
        if (assembled.error == AssemblyError::kNone) break;
        if (assembled.error == AssemblyError::kInsufficientEndorsements) {
            result.error = "insufficient endorsements";
            return pending;
        }
        // Divergent read sets: endorsers were mid-commit; retry.
    }
    if (assembled.error != AssemblyError::kNone) {
        result.error = "endorsement divergence persisted";
        return pending;
    }
    result.endorsed_ns = now_ns();
    result.result = responses.front().result;

    pending.waiter = std::make_shared<Waiter>();
    pending.waiter_key = to_hex(Bytes(tx_id.begin(), tx_id.end()));
    {
        std::lock_guard lk(waiters_m_);
        waiters_[pending.waiter_key] = pending.waiter;
    }

    Bytes payload = serialize_tx(assembled.tx);
    try {
        result.seq = ordering_->order(payload);
    } catch (const OrderingTimeout&) {
        std::lock_guard lk(waiters_m_);
        waiters_.erase(pending.waiter_key);
        result.error = "ordering timeout";
        return pending;
    }
    result.ordered_ns = now_ns();
    pending.ordered = true;
    return pending;
}

SubmitResult Network::finish_submit(PendingSubmit& pending) {
    SubmitResult& result = pending.result;
    if (!pending.ordered) return result;

    std::unique_lock lk(pending.waiter->m);
    bool done = pending.waiter->cv.wait_for(lk, std::chrono::milliseconds(config_.op_timeout_ms),
                                            [&] { return pending.waiter->done; });
    if (!done) {
        std::lock_guard wlk(waiters_m_);
        waiters_.erase(pending.waiter_key);
        result.error = "commit timeout";
        return result;
    }
    result.ok = true;
    result.valid = pending.waiter->event.valid;
    result.committed_ns = pending.waiter->event.committed_ns;
    return result;
}

void Network::tap_commits(size_t peer, Pipeline::CommitHandler handler) {
    if (started_) throw std::logic_error("tap_commits after start");
    taps_.emplace_back(peer, std::move(handler));
}

void Network::bootstrap(const std::vector<Proposal>& proposals) {
    for (const auto& p : proposals) {
        auto r = submit(p, 0);
        if (!r.ok || !r.valid)
            throw std::runtime_error("bootstrap failed on " + p.function +
                                     (r.error.empty() ? "" : ": " + r.error));
    }
}

void Network::bootstrap_layers(const std::vector<std::vector<Proposal>>& layers) {
    for (const auto& layer : layers) {
        auto results = submit_batch(layer, 0);
        for (size_t i = 0; i < results.size(); ++i) {
            if (!results[i].ok || !results[i].valid)
                throw std::runtime_error(
                    "bootstrap failed on " + layer[i].function +
                    (results[i].error.empty() ? "" : ": " + results[i].error));
        }
    }
}

}  // namespace brook
