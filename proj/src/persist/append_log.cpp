#include "persist/append_log.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <stdexcept>
#include <system_error>

#include "common/clock.hpp"

namespace brook {

namespace {

[[noreturn]] void die(const std::string& what) {
    throw std::system_error(errno, std::generic_category(), what);
}

void write_all(int fd, const uint8_t* p, size_t n) {
    while (n > 0) {
        ssize_t w = ::write(fd, p, n);
        if (w < 0) {
            if (errno == EINTR) continue;
            die("append log write");
        }
        p += w;
        n -= static_cast<size_t>(w);
    }
}

}  // namespace

AppendLog::AppendLog(const std::filesystem::path& path, BatcherConfig config)
    : path_(path), config_(config) {
    fd_ = ::open(path.c_str(), O_CREAT | O_RDWR | O_APPEND, 0644);
    if (fd_ < 0) die("open " + path.string());
    off_t size = ::lseek(fd_, 0, SEEK_END);
    if (size < 0) die("lseek " + path.string());
    durable_len_ = static_cast<uint64_t>(size);
    timer_ = std::thread(&AppendLog::timer_loop, this);
}

AppendLog::~AppendLog() {
    try {
        close();
    } catch (...) {
        // nothing left to do in a destructor; close() throwing means the
        // owner already hit the fail-stop path
    }
}

uint64_t AppendLog::append(const Bytes& record) {
    std::unique_lock lk(m_);
    if (closed_) throw std::runtime_error("append on closed log");
    uint64_t offset = durable_len_ + buffer_.size();
    buffer_.insert(buffer_.end(), record.begin(), record.end());
    if (oldest_buffered_ns_ == 0) {
        oldest_buffered_ns_ = now_ns();
        timer_cv_.notify_one();    // arm the timeout
    }
    if (buffer_.size() >= config_.flush_bytes) flush_locked(lk);
    return offset;
}

Bytes AppendLog::read_at(uint64_t offset, size_t length) {
    std::unique_lock lk(m_);
    uint64_t logical = durable_len_ + buffer_.size();
    if (offset + length > logical) throw std::out_of_range("read past logical end");
    if (offset + length > durable_len_) flush_locked(lk);

    Bytes out(length);
    size_t got = 0;
    while (got < length) {
        ssize_t r = ::pread(fd_, out.data() + got, length - got,
                            static_cast<off_t>(offset + got));
        if (r < 0) {
            if (errno == EINTR) continue;
            die("append log read");
        }
        if (r == 0) throw std::runtime_error("short read from append log");
        got += static_cast<size_t>(r);
    }
    return out;
}

void AppendLog::flush() {
    std::unique_lock lk(m_);
    if (!buffer_.empty()) flush_locked(lk);
}

void AppendLog::flush_locked(std::unique_lock<std::mutex>&) {
    if (buffer_.empty()) return;
    int64_t t0 = now_ns();
    write_all(fd_, buffer_.data(), buffer_.size());
    if (config_.fsync == FsyncPolicy::kPerFlush) {
        if (::fsync(fd_) != 0) die("append log fsync");
    }
    durable_len_ += buffer_.size();
    metrics_.flushed_bytes += buffer_.size();
    metrics_.flush_count += 1;
    int64_t dt = now_ns() - t0;
    int64_t prev = metrics_.max_flush_ns.load();
    while (dt > prev && !metrics_.max_flush_ns.compare_exchange_weak(prev, dt)) {
    }
    buffer_.clear();
    oldest_buffered_ns_ = 0;
}

void AppendLog::timer_loop() {
    std::unique_lock lk(m_);
    while (!closed_) {
        if (oldest_buffered_ns_ == 0) {
            timer_cv_.wait(lk, [&] { return closed_ || oldest_buffered_ns_ != 0; });
            continue;
        }
        auto deadline = std::chrono::nanoseconds(oldest_buffered_ns_) +
                        std::chrono::milliseconds(config_.flush_timeout_ms);
        auto now = std::chrono::nanoseconds(now_ns());
        if (now >= deadline) {
            flush_locked(lk);
            continue;
        }
        timer_cv_.wait_for(lk, deadline - now);
    }
}

uint64_t AppendLog::logical_size() const {
    std::lock_guard lk(m_);
    return durable_len_ + buffer_.size();
}

uint64_t AppendLog::durable_size() const {
    std::lock_guard lk(m_);
    return durable_len_;
}

void AppendLog::close() {
    {
        std::unique_lock lk(m_);
        if (closed_) return;
        flush_locked(lk);
        closed_ = true;
        timer_cv_.notify_all();
    }
    timer_.join();
    ::close(fd_);
    fd_ = -1;
}

void AppendLog::abandon() {
    {
        std::unique_lock lk(m_);
        if (closed_) return;
        buffer_.clear();
        oldest_buffered_ns_ = 0;
        closed_ = true;
        timer_cv_.notify_all();
    }
    timer_.join();
    ::close(fd_);
    fd_ = -1;
}

std::vector<Bytes> AppendLog::recover(const std::filesystem::path& path) {
    int fd = ::open(path.c_str(), O_RDWR);
    if (fd < 0) {
        if (errno == ENOENT) return {};
        die("open " + path.string());
    }
    off_t end = ::lseek(fd, 0, SEEK_END);
    if (end < 0) die("lseek " + path.string());
    Bytes content(static_cast<size_t>(end));
    size_t got = 0;
    while (got < content.size()) {
        ssize_t r = ::pread(fd, content.data() + got, content.size() - got,
                            static_cast<off_t>(got));
        if (r <= 0) {
            if (r < 0 && errno == EINTR) continue;
            die("read " + path.string());
        }
        got += static_cast<size_t>(r);
    }

    std::vector<Bytes> records;
    size_t pos = 0;
    while (content.size() - pos >= 4) {
        uint32_t len = 0;
        std::memcpy(&len, content.data() + pos, 4);
        if (content.size() - pos - 4 < len) break;
        records.emplace_back(content.begin() + pos + 4, content.begin() + pos + 4 + len);
        pos += 4 + len;
    }
    if (pos != content.size()) {
        if (::ftruncate(fd, static_cast<off_t>(pos)) != 0) die("truncate " + path.string());
    }
    ::close(fd);
    return records;
}

}  // namespace brook
