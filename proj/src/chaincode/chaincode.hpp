#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ledger/types.hpp"
#include "statedb/state_db.hpp"

namespace brook {

struct Proposal {
    std::string chaincode_id;
    std::string function;
    std::vector<Bytes> args;
    std::string client_id;
};

// Source of committed state for speculative execution.
class StateReader {
  public:
    virtual ~StateReader() = default;
    virtual std::optional<StateEntry> read_state(const Key& key) const = 0;
};

class StateDbReader : public StateReader {
  public:
    explicit StateDbReader(const StateDb& db) : db_(db) {}
    std::optional<StateEntry> read_state(const Key& key) const override { return db_.get(key); }

  private:
    const StateDb& db_;
};

// Records every state access made by a chaincode invocation. Reads of keys
// the invocation itself wrote come from the pending write and are not
// recorded; everything else lands in the read set with the version seen.
class TxSimulator {
  public:
    explicit TxSimulator(const StateReader& reader) : reader_(reader) {}

    std::optional<Bytes> read(const Key& key);
    Version read_version(const Key& key);
    void write(const Key& key, Bytes value);
    void del(const Key& key);

    // Sorted, duplicate-free; safe to call once execution finishes.
    ReadWriteSet take_rwset();

  private:
    const StateReader& reader_;
    std::map<Key, Version> reads_;
    std::map<Key, std::optional<Bytes>> read_cache_;
    std::map<Key, WriteEntry> writes_;
};

struct ExecResult {
    bool ok = false;
    std::string error;
    Bytes result;
    ReadWriteSet rwset;
};

inline ExecResult exec_failure(std::string error) {
    ExecResult r;
    r.error = std::move(error);
    return r;
}

class Chaincode {
  public:
    virtual ~Chaincode() = default;
    virtual const std::string& id() const = 0;
    // On success the caller harvests the simulator's read/write set; on
    // failure no write set is produced.
    virtual ExecResult invoke(const Proposal& proposal, TxSimulator& sim) = 0;
};

class ChaincodeRegistry {
  public:
    void install(std::shared_ptr<Chaincode> cc);
    Chaincode* find(const std::string& chaincode_id) const;

    // Runs the chaincode against the given state and fills in the rwset.
    ExecResult execute(const Proposal& proposal, const StateReader& reader) const;

  private:
    std::map<std::string, std::shared_ptr<Chaincode>> chaincodes_;
};

std::shared_ptr<Chaincode> make_kv_chaincode();
std::shared_ptr<Chaincode> make_scm_chaincode();

}  // namespace brook
