#pragma once

#include <set>
#include <string>
#include <vector>

#include "chaincode/chaincode.hpp"
#include "crypto/signer.hpp"
#include "ledger/types.hpp"

namespace brook {

struct EndorserIdentity {
    std::string id;
    KeyPair keys;
};

struct EndorsementPolicy {
    size_t required = 1;    // k
    std::set<std::string> endorsers;    // the n named identities

    bool well_formed() const {
        return required >= 1 && required <= endorsers.size();
    }
};

struct EndorsementResponse {
    bool ok = false;
    std::string error;
    ReadWriteSet rwset;
    Bytes rwset_bytes;    // canonical serialization, what the signature covers
    Bytes result;
    Bytes signature;
    std::string endorser_id;
};

// Executes a proposal against this endorser's state view and signs the
// canonical read/write set bytes. Chaincode failure propagates as refusal.
EndorsementResponse endorse(const EndorserIdentity& identity, CryptoMode mode,
                            const ChaincodeRegistry& registry, const StateReader& state,
                            const Proposal& proposal);

enum class AssemblyError {
    kNone,
    kInsufficientEndorsements,
    kDivergentReadWriteSets,    // retry-able: concurrent endorsers saw different state
};

struct AssemblyResult {
    AssemblyError error = AssemblyError::kNone;
    Transaction tx;
};

// Client-side transaction assembly: requires every endorsement to carry
// identical rwset bytes and the count to satisfy the policy.
AssemblyResult assemble_tx(const Proposal& proposal,
                           const std::vector<EndorsementResponse>& endorsements,
                           const EndorsementPolicy& policy, CryptoMode mode,
                           const Bytes& client_secret_key, const TxId& tx_id,
                           int64_t submit_ts);

// True iff the client signature and at least policy.required signatures
// from distinct policy endorsers verify over the transaction's rwset bytes.
bool verify_endorsement(const Transaction& tx, const EndorsementPolicy& policy,
                        const IdentityRoster& roster, CryptoMode mode,
                        const Bytes& client_public_key);

}  // namespace brook
