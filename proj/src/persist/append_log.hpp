#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "common/bytes.hpp"

namespace brook {

enum class FsyncPolicy : uint8_t {
    kPerFlush,
    kNever,    // test-only
};

struct BatcherConfig {
    size_t flush_bytes = 64 * 1024;
    int flush_timeout_ms = 100;
    FsyncPolicy fsync = FsyncPolicy::kPerFlush;
};

struct FlushMetrics {
    std::atomic<uint64_t> flush_count{0};
    std::atomic<uint64_t> flushed_bytes{0};
    std::atomic<int64_t> max_flush_ns{0};
};

// Append-only file with a local write batcher: appends accumulate in a
// buffer that is flushed once flush_bytes have accumulated or the oldest
// buffered byte is flush_timeout_ms old. Reads that touch the buffered
// tail force a synchronous flush first, so the file plus buffer always
// behave like an unbatched log.
class AppendLog {
  public:
    AppendLog(const std::filesystem::path& path, BatcherConfig config);
    ~AppendLog();

    AppendLog(const AppendLog&) = delete;
    AppendLog& operator=(const AppendLog&) = delete;

    // Returns the logical offset of the appended record.
    uint64_t append(const Bytes& record);

    // Bytes appended are readable immediately, durable after the next flush.
    Bytes read_at(uint64_t offset, size_t length);

    void flush();

    uint64_t logical_size() const;
    uint64_t durable_size() const;

    // Clean shutdown: flush, fsync per policy, close.
    void close();

    // Crash simulation: drop the buffered tail and close the fd without
    // flushing. The file is left at its current durable prefix.
    void abandon();

    const FlushMetrics& metrics() const { return metrics_; }

    // Scans [u32 length][body] frames and returns the longest well-framed
    // prefix. A torn tail is truncated from the file.
    static std::vector<Bytes> recover(const std::filesystem::path& path);

  private:
    void flush_locked(std::unique_lock<std::mutex>& lk);
    void timer_loop();

    const std::filesystem::path path_;
    const BatcherConfig config_;
    int fd_ = -1;

    mutable std::mutex m_;
    Bytes buffer_;
    uint64_t durable_len_ = 0;
    int64_t oldest_buffered_ns_ = 0;    // 0 when buffer empty
    bool closed_ = false;

    std::condition_variable timer_cv_;
    std::thread timer_;

    FlushMetrics metrics_;
};

}  // namespace brook
