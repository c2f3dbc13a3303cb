#pragma once

#include <deque>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "chaincode/chaincode.hpp"
#include "chaincode/scm.hpp"

namespace brook {

enum class WorkloadKind { kYcsb90, kYcsb50, kScm95, kScm99 };

std::optional<WorkloadKind> parse_workload(const std::string& name);
const char* to_string(WorkloadKind kind);
bool is_scm(WorkloadKind kind);

struct WorkloadSpec {
    WorkloadKind kind = WorkloadKind::kYcsb90;
    uint64_t key_space = 10000;
    double working_set_fraction = 1.0;    // contention knob: 0 < f <= 1
    double zipf_theta = 0.0;              // key skew inside the working set; 0 = uniform
    size_t value_size = 1024;
    uint64_t total_ops = 10000;
    uint32_t clients = 1;
    uint64_t seed = 1;
    int think_time_ms = 0;    // client-side pause between ops (models client RTT)

    // SCM scale
    uint32_t vendors = 50;
    uint32_t products = 500;
    uint32_t contracts = 6000;
};

struct GenOp {
    std::string op_type;
    Proposal proposal;
};

// Deterministic per-client operation stream: (spec, client_id) fully
// determines the sequence. Operation mixes are exact per 100-op window,
// not merely Bernoulli-expected.
class OpGenerator {
  public:
    virtual ~OpGenerator() = default;
    virtual GenOp next() = 0;
};

std::unique_ptr<OpGenerator> make_generator(const WorkloadSpec& spec, uint32_t client_id);

// Bootstrap proposals for SCM: vendors, products, inventories, contracts,
// in dependency order. Deterministic in spec.seed.
std::vector<Proposal> scm_bootstrap(const WorkloadSpec& spec);

// Same proposals grouped so that each layer is conflict-free internally and
// depends only on earlier layers; layers can be submitted without waiting
// per-transaction. Vendors go one per layer (they all touch the vendor
// index).
std::vector<std::vector<Proposal>> scm_bootstrap_layers(const WorkloadSpec& spec);

// The contract table implied by spec.seed; index k holds contract "c<k>".
std::vector<scm::Contract> scm_contract_table(const WorkloadSpec& spec);

}  // namespace brook
