#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <thread>

#include "common/bytes.hpp"

namespace brook {

// Minimal blocking TCP helpers for loopback deployments. All framing sits
// one layer up (ordering/wire.hpp).

class TcpConn {
  public:
    explicit TcpConn(int fd) : fd_(fd) {}
    ~TcpConn();

    TcpConn(const TcpConn&) = delete;
    TcpConn& operator=(const TcpConn&) = delete;

    static std::unique_ptr<TcpConn> connect(const std::string& host, uint16_t port,
                                            int timeout_ms = 1000);

    // False on EOF or error.
    bool send_all(const uint8_t* data, size_t size);
    bool recv_all(uint8_t* data, size_t size);

    void set_recv_timeout(int timeout_ms);
    void shutdown();
    int fd() const { return fd_; }

  private:
    int fd_;
};

class TcpListener {
  public:
    // Binds 127.0.0.1:port; port 0 picks a free port (see port()).
    explicit TcpListener(uint16_t port);
    ~TcpListener();

    TcpListener(const TcpListener&) = delete;
    TcpListener& operator=(const TcpListener&) = delete;

    // Nullptr once closed.
    std::unique_ptr<TcpConn> accept();
    void close();
    uint16_t port() const { return port_; }

  private:
    int fd_ = -1;
    uint16_t port_ = 0;
    std::atomic<bool> closed_{false};
};

}  // namespace brook
