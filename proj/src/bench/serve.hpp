#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "bench/network.hpp"
#include "net/tcp.hpp"

namespace brook {

// Socket front for a running Network:
//  - one commit-event subscription listener per peer (CommitEvent frames,
//    pushed from commit onward; lagging subscribers are disconnected),
//  - a transaction submission listener speaking the ordering wire protocol
//    (SUBMIT / FETCH),
//  - an HTTP admin endpoint (status, checkpoint trigger).
// Construct before Network::start() so event taps can be installed.
class NetServer {
  public:
    explicit NetServer(Network& net);
    ~NetServer();

    NetServer(const NetServer&) = delete;
    NetServer& operator=(const NetServer&) = delete;

    // Call after Network::start().
    void start();
    void stop();

    uint16_t event_port(size_t peer) const;
    uint16_t submit_port() const;
    uint16_t admin_port() const { return admin_port_; }

  private:
    struct EventHub;

    void submit_loop();
    void submit_conn_loop(std::shared_ptr<TcpConn> conn);
    void admin_loop();

    Network& net_;
    std::vector<std::unique_ptr<EventHub>> hubs_;

    std::unique_ptr<TcpListener> submit_listener_;
    std::thread submit_thread_;
    std::vector<std::thread> submit_conn_threads_;
    std::mutex submit_m_;
    std::vector<std::shared_ptr<TcpConn>> submit_conns_;

    std::thread admin_thread_;
    uint16_t admin_port_ = 0;
    std::shared_ptr<void> admin_server_;    // httplib::Server, kept opaque here

    std::atomic<bool> running_{false};
};

}  // namespace brook
