#include "bench/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "common/clock.hpp"

namespace brook {

namespace {

double ns_to_ms(int64_t ns) { return static_cast<double>(ns) / 1e6; }

double percentile(std::vector<double>& sorted, double p) {
    if (sorted.empty()) return 0;
    size_t idx = static_cast<size_t>(p * (sorted.size() - 1));
    return sorted[idx];
}

}  // namespace

RunReport run_closed_loop(Network& net, const WorkloadSpec& spec) {
    RunReport report;
    report.spec = spec;

    if (is_scm(spec.kind)) net.bootstrap_layers(scm_bootstrap_layers(spec));

    uint32_t clients = std::max<uint32_t>(1, spec.clients);
    std::vector<std::vector<OpRecord>> per_client(clients);
    std::vector<std::thread> threads;
    for (uint32_t c = 0; c < clients; ++c) {
        uint64_t ops = spec.total_ops / clients + (c == 0 ? spec.total_ops % clients : 0);
        threads.emplace_back([&net, &spec, &per_client, c, ops] {
            auto gen = make_generator(spec, c);
            auto& out = per_client[c];
            out.reserve(ops);
            for (uint64_t i = 0; i < ops; ++i) {
                if (spec.think_time_ms > 0)
                    std::this_thread::sleep_for(std::chrono::milliseconds(spec.think_time_ms));
                GenOp op = gen->next();
                OpRecord rec;
                rec.op_type = op.op_type;
                rec.client = c;
                rec.submit_ns = now_ns();
                SubmitResult r = net.submit(op.proposal, c);
                rec.endorsed_ns = r.endorsed_ns;
                rec.ordered_ns = r.ordered_ns;
                rec.committed_ns = r.committed_ns;
                rec.valid = r.ok && r.valid;
                rec.error = !r.ok;
                rec.seq = r.seq;
                out.push_back(std::move(rec));
            }
        });
    }
    for (auto& t : threads) t.join();

    for (auto& v : per_client) {
        report.issued += v.size();
        for (auto& rec : v) report.records.push_back(std::move(rec));
    }
    std::sort(report.records.begin(), report.records.end(),
              [](const OpRecord& a, const OpRecord& b) { return a.submit_ns < b.submit_ns; });
    for (size_t i = 0; i < report.records.size(); ++i) report.records[i].op_index = i;
    for (const auto& rec : report.records)
        rec.error ? ++report.timed_out : ++report.completed;
    report.aggregates = compute_aggregates(report.records);
    return report;
}

Aggregates compute_aggregates(const std::vector<OpRecord>& records) {
    Aggregates agg;
    size_t n = records.size();
    size_t skip = n / 10;
    if (n == 0) return agg;

    int64_t first_ns = 0, last_ns = 0;
    std::vector<double> e2e;
    double e_sum = 0, o_sum = 0, v_sum = 0, e2e_sum = 0;
    uint64_t spanned = 0;
    for (size_t i = skip; i + skip < n; ++i) {
        const auto& rec = records[i];
        ++agg.window_ops;
        if (rec.error) {
            ++agg.errors;
            continue;
        }
        rec.valid ? ++agg.valid_ops : ++agg.invalid_ops;
        if (rec.committed_ns > 0) {
            if (first_ns == 0 || rec.submit_ns < first_ns) first_ns = rec.submit_ns;
            last_ns = std::max(last_ns, rec.committed_ns);
            double ms = ns_to_ms(rec.committed_ns - rec.submit_ns);
            e2e.push_back(ms);
            e2e_sum += ms;
            e_sum += ns_to_ms(rec.endorsed_ns - rec.submit_ns);
            o_sum += ns_to_ms(rec.ordered_ns - rec.endorsed_ns);
            v_sum += ns_to_ms(rec.committed_ns - rec.ordered_ns);
            ++spanned;
        }
    }

    double span_s = first_ns < last_ns ? static_cast<double>(last_ns - first_ns) / 1e9 : 0;
    if (span_s > 0) {
        agg.throughput = static_cast<double>(agg.valid_ops + agg.invalid_ops) / span_s;
        agg.goodput = static_cast<double>(agg.valid_ops) / span_s;
    }
    if (agg.valid_ops + agg.invalid_ops > 0)
        agg.failing_pct = 100.0 * static_cast<double>(agg.invalid_ops) /
                          static_cast<double>(agg.valid_ops + agg.invalid_ops);
    if (spanned > 0) {
        std::sort(e2e.begin(), e2e.end());
        agg.e2e_mean_ms = e2e_sum / static_cast<double>(spanned);
        agg.e2e_p50_ms = percentile(e2e, 0.50);
        agg.e2e_p99_ms = percentile(e2e, 0.99);
        agg.endorse_mean_ms = e_sum / static_cast<double>(spanned);
        agg.order_mean_ms = o_sum / static_cast<double>(spanned);
        agg.validate_mean_ms = v_sum / static_cast<double>(spanned);
    }
    return agg;
}

void write_csv(const RunReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    out << "op_index,op_type,client,submit_ns,endorsed_ns,ordered_ns,committed_ns,valid\n";
    for (const auto& rec : report.records) {
        out << rec.op_index << ',' << rec.op_type << ',' << rec.client << ',' << rec.submit_ns
            << ',' << rec.endorsed_ns << ',' << rec.ordered_ns << ',' << rec.committed_ns << ','
            << (rec.valid ? 1 : 0) << '\n';
    }
}

std::string summarize(const RunReport& report) {
    const auto& a = report.aggregates;
    std::ostringstream out;
    out << "workload " << to_string(report.spec.kind) << "  ops " << report.spec.total_ops
        << "  clients " << report.spec.clients << "  seed " << report.spec.seed << "\n"
        << "issued " << report.issued << "  completed " << report.completed << "  errors "
        << report.timed_out << "\n"
        << "middle-80% window: " << a.window_ops << " ops\n"
        << "  throughput  " << a.throughput << " tx/s\n"
        << "  goodput     " << a.goodput << " tx/s\n"
        << "  failing     " << a.failing_pct << " %\n"
        << "  e2e latency mean " << a.e2e_mean_ms << " ms  p50 " << a.e2e_p50_ms << " ms  p99 "
        << a.e2e_p99_ms << " ms\n"
        << "  stage means (ms): endorse " << a.endorse_mean_ms << "  order " << a.order_mean_ms
        << "  validate " << a.validate_mean_ms << "\n";
    return out.str();
}

}  // namespace brook
