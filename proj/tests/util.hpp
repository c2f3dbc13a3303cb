#pragma once

#include <atomic>
#include <cstring>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <unistd.h>

#include "chaincode/chaincode.hpp"
#include "common/sha256.hpp"
#include "endorse/endorser.hpp"
#include "ledger/codec.hpp"
#include "ordering/ordering.hpp"
#include "statedb/state_db.hpp"

namespace brook::testutil {

inline std::atomic<uint64_t> g_dir_counter{0};

struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               ("brook-" + tag + "-" + std::to_string(::getpid()) + "-" +
                std::to_string(g_dir_counter.fetch_add(1)));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

// Produces fully endorsed, signed transactions against a private state
// view, for driving the validator without a whole network.
struct TxFactory {
    CryptoMode mode;
    ChaincodeRegistry registry;
    StateDb state{8};
    EndorserIdentity endorser{"peer0", KeyPair::generate(1, "peer0")};
    KeyPair client = KeyPair::generate(1, "client");
    IdentityRoster roster;
    EndorsementPolicy policy;
    uint64_t counter = 0;

    explicit TxFactory(CryptoMode m = CryptoMode::kNull) : mode(m) {
        registry.install(make_kv_chaincode());
        registry.install(make_scm_chaincode());
        roster.add("peer0", endorser.keys.public_key);
        policy.required = 1;
        policy.endorsers = {"peer0"};
    }

    TxId next_id() {
        TxId id{};
        uint64_t c = ++counter;
        std::memcpy(id.data(), &c, sizeof(c));
        return id;
    }

    Transaction make_tx(const Proposal& p) {
        StateDbReader reader(state);
        EndorsementResponse resp = endorse(endorser, mode, registry, reader, p);
        if (!resp.ok) throw std::runtime_error("endorse refused: " + resp.error);
        AssemblyResult ar = assemble_tx(p, {resp}, policy, mode, client.secret_key,
                                        next_id(), static_cast<int64_t>(counter));
        if (ar.error != AssemblyError::kNone) throw std::runtime_error("assembly failed");
        return ar.tx;
    }

    // Marks the tx committed in the endorsement view so later proposals see
    // fresh versions.
    void advance(const Transaction& tx, uint64_t seq) {
        if (!state.check_and_commit(tx.rwset, seq))
            throw std::runtime_error("advance: stale endorsement view");
    }

    static OrderedEntry entry_for(uint64_t seq, const Transaction& tx) {
        OrderedEntry e;
        e.seq = seq;
        e.payload = serialize_tx(tx);
        e.payload_hash = sha256(e.payload);
        return e;
    }

    static Proposal kv_write(const std::string& fn, const std::string& key,
                             const std::string& value) {
        Proposal p;
        p.chaincode_id = "kv";
        p.function = fn;
        p.args = {to_bytes(key), to_bytes(value)};
        return p;
    }

    static Proposal kv_read(const std::string& key) {
        Proposal p;
        p.chaincode_id = "kv";
        p.function = "read";
        p.args = {to_bytes(key)};
        return p;
    }
};

}  // namespace brook::testutil
