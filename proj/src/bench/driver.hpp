#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "bench/network.hpp"
#include "bench/workload.hpp"

namespace brook {

struct OpRecord {
    uint64_t op_index = 0;
    std::string op_type;
    uint32_t client = 0;
    int64_t submit_ns = 0;
    int64_t endorsed_ns = 0;
    int64_t ordered_ns = 0;
    int64_t committed_ns = 0;
    bool valid = false;
    bool error = false;    // refused, timed out, or ordering failure
    uint64_t seq = 0;
};

// Aggregates over the middle 80% of operations (warm-up and cool-down
// excluded).
struct Aggregates {
    uint64_t window_ops = 0;
    uint64_t valid_ops = 0;
    uint64_t invalid_ops = 0;
    uint64_t errors = 0;
    double throughput = 0;     // completed ops / s
    double goodput = 0;        // committed-valid ops / s
    double failing_pct = 0;    // invalid / (valid + invalid) * 100
    double e2e_mean_ms = 0;
    double e2e_p50_ms = 0;
    double e2e_p99_ms = 0;
    double endorse_mean_ms = 0;
    double order_mean_ms = 0;
    double validate_mean_ms = 0;
};

struct RunReport {
    WorkloadSpec spec;
    std::vector<OpRecord> records;    // completion order, op_index assigned
    Aggregates aggregates;
    uint64_t issued = 0;
    uint64_t completed = 0;
    uint64_t timed_out = 0;
};

// One thread per client, each endorsing, ordering, and awaiting the commit
// event before issuing its next operation. SCM workloads bootstrap their
// dataset first (untimed).
RunReport run_closed_loop(Network& net, const WorkloadSpec& spec);

Aggregates compute_aggregates(const std::vector<OpRecord>& records);

void write_csv(const RunReport& report, const std::filesystem::path& path);
std::string summarize(const RunReport& report);

}  // namespace brook
