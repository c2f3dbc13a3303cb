#include "chaincode/chaincode.hpp"

namespace brook {

std::optional<Bytes> TxSimulator::read(const Key& key) {
    auto wit = writes_.find(key);
    if (wit != writes_.end()) {
        if (wit->second.is_delete) return std::nullopt;
        return wit->second.value;
    }
    auto cit = read_cache_.find(key);
    if (cit != read_cache_.end()) return cit->second;

    auto entry = reader_.read_state(key);
    reads_.emplace(key, entry ? entry->version : kVersionAbsent);
    auto value = entry ? std::optional<Bytes>(std::move(entry->value)) : std::nullopt;
    read_cache_.emplace(key, value);
    return value;
}

Version TxSimulator::read_version(const Key& key) {
    read(key);
    auto it = reads_.find(key);
    return it == reads_.end() ? kVersionAbsent : it->second;
}

void TxSimulator::write(const Key& key, Bytes value) {
    writes_[key] = WriteEntry{key, false, std::move(value)};
}

void TxSimulator::del(const Key& key) {
    writes_[key] = WriteEntry{key, true, {}};
}

ReadWriteSet TxSimulator::take_rwset() {
    ReadWriteSet rwset;
    rwset.reads.reserve(reads_.size());
    for (auto& [key, version] : reads_) rwset.reads.push_back(ReadEntry{key, version});
    rwset.writes.reserve(writes_.size());
    for (auto& [key, wr] : writes_) rwset.writes.push_back(std::move(wr));
    return rwset;
}

void ChaincodeRegistry::install(std::shared_ptr<Chaincode> cc) {
    chaincodes_[cc->id()] = std::move(cc);
}

Chaincode* ChaincodeRegistry::find(const std::string& chaincode_id) const {
    auto it = chaincodes_.find(chaincode_id);
    return it == chaincodes_.end() ? nullptr : it->second.get();
}

ExecResult ChaincodeRegistry::execute(const Proposal& proposal, const StateReader& reader) const {
    Chaincode* cc = find(proposal.chaincode_id);
    if (cc == nullptr) return exec_failure("unknown chaincode: " + proposal.chaincode_id);
    TxSimulator sim(reader);
    ExecResult result = cc->invoke(proposal, sim);
    if (result.ok) result.rwset = sim.take_rwset();
    return result;
}

namespace {

// Key-value chaincode backing the YCSB-style workloads. A read consults
// the key; insert and update both record the current version (0 for a
// fresh key) and write the new value.
class KvChaincode : public Chaincode {
  public:
    const std::string& id() const override { return id_; }

    ExecResult invoke(const Proposal& proposal, TxSimulator& sim) override {
        if (proposal.args.empty()) return exec_failure("kv: missing key argument");
        Key key{id_, proposal.args[0]};
        if (proposal.function == "read") {
            auto value = sim.read(key);
            ExecResult r;
            r.ok = true;
            if (value) r.result = *value;
            return r;
        }
        if (proposal.function == "insert" || proposal.function == "update") {
            if (proposal.args.size() < 2) return exec_failure("kv: missing value argument");
            sim.read_version(key);
            sim.write(key, proposal.args[1]);
            ExecResult r;
            r.ok = true;
            return r;
        }
        if (proposal.function == "delete") {
            sim.read_version(key);
            sim.del(key);
            ExecResult r;
            r.ok = true;
            return r;
        }
        return exec_failure("kv: unknown function " + proposal.function);
    }

  private:
    std::string id_ = "kv";
};

}  // namespace

std::shared_ptr<Chaincode> make_kv_chaincode() { return std::make_shared<KvChaincode>(); }

}  // namespace brook
