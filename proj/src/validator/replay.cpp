#include "validator/replay.hpp"

#include <fstream>

#include "ledger/chain.hpp"
#include "ledger/codec.hpp"
#include "persist/append_log.hpp"

namespace brook {

ReplayResult replay_records(const std::vector<LedgerRecord>& records, const SigCheck& sig_check) {
    ReplayResult result;
    StateDb db(1);
    for (const auto& rec : records) {
        bool valid = false;
        try {
            Transaction tx = deserialize_tx(rec.tx_bytes);
            valid = (!sig_check || sig_check(tx)) && db.check_and_commit(tx.rwset, rec.seq);
        } catch (const CodecError&) {
            valid = false;
        }
        result.validity.push_back(valid ? 1 : 0);
        result.recorded.push_back(rec.valid ? 1 : 0);
        ++result.records;
    }
    result.state_digest = db.digest();
    return result;
}

std::vector<LedgerRecord> load_ledger(const std::filesystem::path& path) {
    std::vector<LedgerRecord> records;
    for (auto& body : AppendLog::recover(path)) records.push_back(unframe_record(body));
    return records;
}

ReplayResult replay_ledger_file(const std::filesystem::path& path, const SigCheck& sig_check) {
    return replay_records(load_ledger(path), sig_check);
}

std::optional<std::vector<LedgerRecord>> load_ledger_strict(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    Bytes content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    std::vector<LedgerRecord> records;
    size_t pos = 0;
    while (pos < content.size()) {
        if (content.size() - pos < 4) return std::nullopt;
        uint32_t len = static_cast<uint32_t>(content[pos]) | (content[pos + 1] << 8) |
                       (content[pos + 2] << 16) | (static_cast<uint32_t>(content[pos + 3]) << 24);
        pos += 4;
        if (len < 8 + 1 + 32 || content.size() - pos < len) return std::nullopt;
        Bytes body(content.begin() + pos, content.begin() + pos + len);
        pos += len;
        if (body[8] > 1) return std::nullopt;    // validity byte is strictly 0|1
        try {
            records.push_back(unframe_record(body));
        } catch (const CodecError&) {
            return std::nullopt;
        }
    }
    return records;
}

bool verify_ledger_file(const std::filesystem::path& path, const SigCheck& sig_check) {
    auto records = load_ledger_strict(path);
    if (!records) return false;
    if (!verify_chain(*records)) return false;
    return replay_records(*records, sig_check).matches_recorded();
}

}  // namespace brook
