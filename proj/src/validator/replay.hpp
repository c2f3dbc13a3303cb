#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "ledger/types.hpp"
#include "statedb/state_db.hpp"

namespace brook {

// Independent single-threaded re-execution of an ordered transcript:
// deserialize each record's transaction, re-run the signature check and
// MVCC validation against a fresh store, and report what the pipeline
// should have decided.
struct ReplayResult {
    std::vector<uint8_t> validity;    // one flag per record, in seq order
    std::vector<uint8_t> recorded;    // the valid flags stored in the ledger
    Hash32 state_digest{};
    uint64_t records = 0;

    bool matches_recorded() const { return validity == recorded; }
};

// Signature predicate; an empty function trusts the signature stage (used
// by the standalone CLI, which has no key material).
using SigCheck = std::function<bool(const Transaction&)>;

ReplayResult replay_records(const std::vector<LedgerRecord>& records,
                            const SigCheck& sig_check = {});

// Loads [u32 len]-framed ledger records from disk (truncating a torn tail).
std::vector<LedgerRecord> load_ledger(const std::filesystem::path& path);

// Strict variant for tamper checking: every byte must belong to a
// well-formed frame; nullopt on any framing violation. Never modifies the
// file.
std::optional<std::vector<LedgerRecord>> load_ledger_strict(const std::filesystem::path& path);

// Full integrity check used by the verification CLI: strict framing,
// gapless hash chain, and recorded validity flags matching a serial
// re-execution (signatures assumed good when no sig_check is given).
bool verify_ledger_file(const std::filesystem::path& path, const SigCheck& sig_check = {});

ReplayResult replay_ledger_file(const std::filesystem::path& path,
                                const SigCheck& sig_check = {});

}  // namespace brook
