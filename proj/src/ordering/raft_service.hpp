#pragma once

#include <mutex>
#include <vector>

#include "net/tcp.hpp"
#include "ordering/ordering.hpp"

namespace brook {

// Client-side view of the replicated ordering cluster. Tracks the current
// leader, follows redirect hints, and retries across nodes until an overall
// deadline, so callers see the same interface as the single-node service.
class RaftOrderingClient : public OrderingService {
  public:
    explicit RaftOrderingClient(std::vector<uint16_t> ports, int op_deadline_ms = 10000);
    ~RaftOrderingClient() override;

    uint64_t order(const Bytes& payload) override;
    std::optional<OrderedEntry> get(uint64_t seq) override;
    std::optional<OrderedEntry> get_last() override;
    std::unique_ptr<DeliveryStream> subscribe(uint64_t from_seq) override;

    // Long-poll variant of get(): waits node-side until the seq commits or
    // the client deadline expires.
    std::optional<OrderedEntry> get_blocking(uint64_t seq);

  private:
    std::unique_ptr<TcpConn> connect_node(size_t idx) const;
    std::optional<OrderedEntry> fetch(uint64_t seq, bool wait);

    std::vector<uint16_t> ports_;
    int op_deadline_ms_;

    std::mutex m_;
    std::unique_ptr<TcpConn> conn_;    // cached connection, presumed leader
    size_t node_idx_ = 0;
};

}  // namespace brook
