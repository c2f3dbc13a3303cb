#include "ordering/solo.hpp"

#include "common/sha256.hpp"
#include "ledger/codec.hpp"

namespace brook {

namespace {
constexpr const char* kLogFile = "orderer.dat";
}

class SoloStream : public DeliveryStream {
  public:
    SoloStream(SoloOrderer& owner, uint64_t from_seq) : owner_(owner), next_seq_(from_seq) {}

    bool next(OrderedEntry& out) override {
        std::unique_lock lk(owner_.m_);
        owner_.cv_.wait(lk, [&] {
            return stopped_ || owner_.stopped_ || owner_.log_.size() >= next_seq_;
        });
        if (stopped_ || owner_.stopped_) return false;
        out = owner_.log_[next_seq_ - 1];
        ++next_seq_;
        return true;
    }

    void stop() override {
        std::lock_guard lk(owner_.m_);
        stopped_ = true;
        owner_.cv_.notify_all();
    }

  private:
    SoloOrderer& owner_;
    uint64_t next_seq_;
    bool stopped_ = false;
};

SoloOrderer::SoloOrderer(const std::filesystem::path& data_dir, BatcherConfig batcher) {
    std::filesystem::create_directories(data_dir);
    auto path = data_dir / kLogFile;
    // Recover before reopening for append so a torn tail is truncated.
    for (auto& body : AppendLog::recover(path)) {
        LedgerRecord rec = unframe_record(body);
        OrderedEntry e;
        e.seq = rec.seq;
        e.payload = std::move(rec.tx_bytes);
        e.payload_hash = rec.chain_hash;
        log_.push_back(std::move(e));
    }
    file_ = std::make_unique<AppendLog>(path, batcher);
}

SoloOrderer::~SoloOrderer() { shutdown(); }

uint64_t SoloOrderer::order(const Bytes& payload) {
    if (payload.empty()) throw std::invalid_argument("empty payload");
    std::unique_lock lk(m_);
    if (stopped_) throw OrderingTimeout();
    OrderedEntry e;
    e.seq = log_.size() + 1;
    e.payload_hash = sha256(payload);
    e.payload = payload;

    LedgerRecord rec;
    rec.seq = e.seq;
    rec.valid = true;
    rec.chain_hash = e.payload_hash;    // per-payload hash, not the peer's prefix chain
    rec.tx_bytes = payload;
    file_->append(frame_record(rec));

    log_.push_back(std::move(e));
    cv_.notify_all();
    return log_.size();
}

std::optional<OrderedEntry> SoloOrderer::get(uint64_t seq) {
    std::lock_guard lk(m_);
    if (seq == 0 || seq > log_.size()) return std::nullopt;
    return log_[seq - 1];
}

std::optional<OrderedEntry> SoloOrderer::get_last() {
    std::lock_guard lk(m_);
    if (log_.empty()) return std::nullopt;
    return log_.back();
}

std::unique_ptr<DeliveryStream> SoloOrderer::subscribe(uint64_t from_seq) {
    return std::make_unique<SoloStream>(*this, from_seq == 0 ? 1 : from_seq);
}

void SoloOrderer::shutdown() {
    {
        std::lock_guard lk(m_);
        if (stopped_) return;
        stopped_ = true;
        cv_.notify_all();
    }
    file_->close();
}

}  // namespace brook
