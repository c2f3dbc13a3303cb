#include "bench/serve.hpp"

#include <httplib.h>

#include <json.hpp>

#include "common/bounded_queue.hpp"
#include "ordering/wire.hpp"
#include "validator/pipeline.hpp"

namespace brook {

// Fan-out point for one peer's commit events. The pipeline's housekeeping
// thread pushes framed events; one writer thread per subscriber drains its
// queue. A subscriber whose queue overflows is lagging and gets dropped,
// never the pipeline.
struct NetServer::EventHub {
    std::unique_ptr<TcpListener> listener;
    std::thread accept_thread;

    struct Sub {
        std::shared_ptr<TcpConn> conn;
        std::unique_ptr<BoundedQueue<Bytes>> queue;
        std::thread writer;
        std::atomic<bool> lagging{false};
    };

    std::mutex m;
    std::vector<std::unique_ptr<Sub>> subs;
    std::atomic<bool> running{false};

    void publish(const CommitEvent& ev) {
        Bytes frame = frame_commit_event(ev);
        std::lock_guard lk(m);
        for (auto& sub : subs) {
            if (sub->lagging.load()) continue;
            if (!sub->queue->try_push(frame)) {
                sub->lagging.store(true);
                sub->queue->close();
            }
        }
    }

    void accept_loop() {
        while (running.load()) {
            auto conn = listener->accept();
            if (!conn) break;
            auto sub = std::make_unique<Sub>();
            sub->conn = std::move(conn);
            sub->queue = std::make_unique<BoundedQueue<Bytes>>(1024);
            Sub* raw = sub.get();
            sub->writer = std::thread([raw] {
                while (auto frame = raw->queue->pop()) {
                    if (!raw->conn->send_all(frame->data(), frame->size())) {
                        raw->queue->close();
                        break;
                    }
                }
                raw->conn->shutdown();
            });
            std::lock_guard lk(m);
            subs.push_back(std::move(sub));
        }
    }

    void stop() {
        running.store(false);
        if (listener) listener->close();
        if (accept_thread.joinable()) accept_thread.join();
        std::lock_guard lk(m);
        for (auto& sub : subs) {
            sub->queue->close();
            sub->conn->shutdown();
            if (sub->writer.joinable()) sub->writer.join();
        }
        subs.clear();
    }
};

NetServer::NetServer(Network& net) : net_(net) {
    for (size_t i = 0; i < net_.peer_count(); ++i) {
        auto hub = std::make_unique<EventHub>();
        EventHub* raw = hub.get();
        net_.tap_commits(i, [raw](const CommitEvent& ev) {
            if (raw->running.load()) raw->publish(ev);
        });
        hubs_.push_back(std::move(hub));
    }
}

NetServer::~NetServer() {
    if (running_.load()) stop();
}

void NetServer::start() {
    running_.store(true);
    for (auto& hub : hubs_) {
        hub->listener = std::make_unique<TcpListener>(0);
        hub->running.store(true);
        hub->accept_thread = std::thread(&EventHub::accept_loop, hub.get());
    }

    submit_listener_ = std::make_unique<TcpListener>(0);
    submit_thread_ = std::thread(&NetServer::submit_loop, this);
    admin_thread_ = std::thread(&NetServer::admin_loop, this);
    // Wait for the admin server to pick its port.
    while (running_.load() && admin_port_ == 0)
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
}

uint16_t NetServer::event_port(size_t peer) const { return hubs_[peer]->listener->port(); }

uint16_t NetServer::submit_port() const { return submit_listener_->port(); }

void NetServer::submit_loop() {
    while (running_.load()) {
        auto conn = submit_listener_->accept();
        if (!conn) break;
        std::shared_ptr<TcpConn> shared = std::move(conn);
        std::lock_guard lk(submit_m_);
        if (!running_.load()) break;
        submit_conns_.push_back(shared);
        submit_conn_threads_.emplace_back(&NetServer::submit_conn_loop, this, shared);
    }
}

void NetServer::submit_conn_loop(std::shared_ptr<TcpConn> conn) {
    while (running_.load()) {
        auto msg = recv_msg(*conn);
        if (!msg) break;
        if (msg->type == MsgType::kSubmit) {
            Msg ack;
            ack.type = MsgType::kSubmitAck;
            try {
                ack.seq = net_.ordering().order(msg->payload);
                ack.submit_status = SubmitStatus::kOk;
            } catch (const std::exception&) {
                ack.submit_status = SubmitStatus::kTimeout;
            }
            if (!send_msg(*conn, ack)) break;
        } else if (msg->type == MsgType::kFetch) {
            Msg reply;
            reply.type = MsgType::kDeliver;
            auto entry = msg->seq == UINT64_MAX ? net_.ordering().get_last()
                                                : net_.ordering().get(msg->seq);
            if (entry) {
                reply.deliver_status = DeliverStatus::kEntry;
                reply.seq = entry->seq;
                reply.payload_hash = entry->payload_hash;
                reply.payload = entry->payload;
            } else {
                reply.deliver_status = DeliverStatus::kNotFound;
            }
            if (!send_msg(*conn, reply)) break;
        }
    }
}

void NetServer::admin_loop() {
    auto server = std::make_shared<httplib::Server>();
    admin_server_ = server;

    server->Get("/status", [this](const httplib::Request&, httplib::Response& res) {
        nlohmann::json j;
        j["peers"] = nlohmann::json::array();
        for (size_t i = 0; i < net_.peer_count(); ++i) {
            auto& pl = net_.peer_pipeline(i);
            nlohmann::json p;
            p["peer"] = i;
            p["last_committed_seq"] = pl.last_committed_seq();
            p["valid"] = pl.metrics().valid.load();
            p["invalid"] = pl.metrics().invalid.load();
            p["halted"] = pl.halted();
            j["peers"].push_back(p);
        }
        j["last_committed_seq"] = net_.peer_pipeline(0).last_committed_seq();
        res.set_content(j.dump(), "application/json");
    });
    server->Post("/checkpoint", [this](const httplib::Request&, httplib::Response& res) {
        for (size_t i = 0; i < net_.peer_count(); ++i) net_.checkpoint_peer(i);
        res.set_content("{\"ok\":true}", "application/json");
    });

    int port = server->bind_to_any_port("127.0.0.1");
    if (port <= 0) return;
    admin_port_ = static_cast<uint16_t>(port);
    server->listen_after_bind();
}

void NetServer::stop() {
    {
        std::lock_guard lk(submit_m_);
        if (!running_.load()) return;
        running_.store(false);
        if (submit_listener_) submit_listener_->close();
        for (auto& c : submit_conns_) c->shutdown();
    }
    if (submit_thread_.joinable()) submit_thread_.join();
    for (auto& t : submit_conn_threads_)
        if (t.joinable()) t.join();
    submit_conn_threads_.clear();
    submit_conns_.clear();

    for (auto& hub : hubs_) hub->stop();

    if (admin_server_) std::static_pointer_cast<httplib::Server>(admin_server_)->stop();
    if (admin_thread_.joinable()) admin_thread_.join();
}

}  // namespace brook
