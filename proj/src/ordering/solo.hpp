#pragma once

#include <condition_variable>
#include <filesystem>
#include <mutex>

#include "ordering/ordering.hpp"
#include "persist/append_log.hpp"

namespace brook {

// Single-node ordering service: no fault tolerance, same interface and log
// format as the replicated service. Doubles as the facade pattern for a
// pluggable ordering backend.
class SoloOrderer : public OrderingService {
  public:
    SoloOrderer(const std::filesystem::path& data_dir, BatcherConfig batcher);
    ~SoloOrderer() override;

    uint64_t order(const Bytes& payload) override;
    std::optional<OrderedEntry> get(uint64_t seq) override;
    std::optional<OrderedEntry> get_last() override;
    std::unique_ptr<DeliveryStream> subscribe(uint64_t from_seq) override;

    void shutdown();

  private:
    friend class SoloStream;

    mutable std::mutex m_;
    std::condition_variable cv_;
    std::vector<OrderedEntry> log_;    // log_[i] holds seq i+1
    bool stopped_ = false;
    std::unique_ptr<AppendLog> file_;
};

}  // namespace brook
