#include "endorse/endorser.hpp"

#include "ledger/codec.hpp"

namespace brook {

EndorsementResponse endorse(const EndorserIdentity& identity, CryptoMode mode,
                            const ChaincodeRegistry& registry, const StateReader& state,
                            const Proposal& proposal) {
    EndorsementResponse resp;
    resp.endorser_id = identity.id;
    ExecResult exec = registry.execute(proposal, state);
    if (!exec.ok) {
        resp.error = exec.error;
        return resp;
    }
    resp.ok = true;
    resp.rwset = std::move(exec.rwset);
    resp.rwset_bytes = serialize_rwset(resp.rwset);
    resp.result = std::move(exec.result);
    resp.signature = sign(mode, identity.keys.secret_key, resp.rwset_bytes);
    return resp;
}

AssemblyResult assemble_tx(const Proposal& proposal,
                           const std::vector<EndorsementResponse>& endorsements,
                           const EndorsementPolicy& policy, CryptoMode mode,
                           const Bytes& client_secret_key, const TxId& tx_id,
                           int64_t submit_ts) {
    AssemblyResult out;
    std::vector<const EndorsementResponse*> usable;
    for (const auto& e : endorsements)
        if (e.ok) usable.push_back(&e);

    if (usable.size() < policy.required) {
        out.error = AssemblyError::kInsufficientEndorsements;
        return out;
    }
    for (const auto* e : usable) {
        if (e->rwset_bytes != usable.front()->rwset_bytes) {
            out.error = AssemblyError::kDivergentReadWriteSets;
            return out;
        }
    }

    Transaction& tx = out.tx;
    tx.tx_id = tx_id;
    tx.chaincode_id = proposal.chaincode_id;
    tx.args.reserve(proposal.args.size() + 1);
    tx.args.push_back(to_bytes(proposal.function));
    for (const auto& a : proposal.args) tx.args.push_back(a);
    tx.rwset = usable.front()->rwset;
    for (const auto* e : usable)
        tx.endorsements.push_back(Endorsement{e->endorser_id, e->signature});
    tx.client_sig = sign(mode, client_secret_key, usable.front()->rwset_bytes);
    tx.submit_ts = submit_ts;
    return out;
}

bool verify_endorsement(const Transaction& tx, const EndorsementPolicy& policy,
                        const IdentityRoster& roster, CryptoMode mode,
                        const Bytes& client_public_key) {
    Bytes rwset_bytes = serialize_rwset(tx.rwset);
    if (!verify(mode, client_public_key, rwset_bytes, tx.client_sig)) return false;

    std::set<std::string> counted;
    for (const auto& e : tx.endorsements) {
        if (!policy.endorsers.contains(e.endorser_id)) continue;    // unknown: not counted
        if (counted.contains(e.endorser_id)) continue;
        const Bytes* pub = roster.find(e.endorser_id);
        if (pub == nullptr) continue;
        if (verify(mode, *pub, rwset_bytes, e.signature)) counted.insert(e.endorser_id);
        else return false;    // a present-but-bad signature is tampering, not absence
    }
    return counted.size() >= policy.required;
}

}  // namespace brook
