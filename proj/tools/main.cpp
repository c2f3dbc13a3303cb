#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <cstdio>
#include <thread>

#include "bench/driver.hpp"
#include "bench/network.hpp"
#include "bench/serve.hpp"
#include "bench/workload.hpp"
#include "ledger/chain.hpp"
#include "validator/replay.hpp"

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop.store(true); }

struct NetOptions {
    uint32_t peers = 5;
    uint32_t orderers = 3;
    std::string mode = "stream";
    size_t block_size = 10;
    int block_timeout_ms = 1000;
    int sig_workers = 6;
    size_t stripes = 64;
    size_t flush_bytes = 64 * 1024;
    int flush_timeout_ms = 100;
    std::string fsync = "on";
    std::string crypto = "real";
    std::string data_dir = "brook-data";

    void attach(CLI::App* cmd) {
        cmd->add_option("--peers", peers, "endorsing/validating peers")->check(CLI::PositiveNumber);
        cmd->add_option("--orderers", orderers, "ordering nodes (1 = single-node)")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--mode", mode, "delivery mode")->check(CLI::IsMember({"stream", "block"}));
        cmd->add_option("--block-size", block_size, "block mode: entries per block")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--block-timeout-ms", block_timeout_ms, "block mode: cut timeout")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--sig-workers", sig_workers, "signature verification workers")
            ->check(CLI::Range(1, 32));
        cmd->add_option("--stripes", stripes, "state store lock stripes")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--flush-bytes", flush_bytes, "batcher flush threshold")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--flush-timeout-ms", flush_timeout_ms, "batcher flush timeout")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--fsync", fsync, "fsync per flush")->check(CLI::IsMember({"on", "off"}));
        cmd->add_option("--crypto", crypto, "signature scheme")
            ->check(CLI::IsMember({"real", "null"}));
        cmd->add_option("--data-dir", data_dir, "ledger/orderer data directory");
    }

    brook::NetworkConfig to_config() const {
        brook::NetworkConfig cfg;
        cfg.peers = peers;
        cfg.orderers = orderers;
        cfg.mode = mode == "block" ? brook::DeliveryMode::kBlock : brook::DeliveryMode::kStream;
        cfg.block_size = block_size;
        cfg.block_timeout_ms = block_timeout_ms;
        cfg.sig_workers = sig_workers;
        cfg.stripes = stripes;
        cfg.batcher.flush_bytes = flush_bytes;
        cfg.batcher.flush_timeout_ms = flush_timeout_ms;
        cfg.batcher.fsync =
            fsync == "on" ? brook::FsyncPolicy::kPerFlush : brook::FsyncPolicy::kNever;
        cfg.crypto = crypto == "real" ? brook::CryptoMode::kReal : brook::CryptoMode::kNull;
        cfg.data_dir = data_dir;
        return cfg;
    }
};

int cmd_net_start(const NetOptions& opts) {
    brook::Network net(opts.to_config());
    brook::NetServer server(net);
    net.start();
    server.start();

    std::printf("network up: %u peers, %u orderers, mode %s, crypto %s\n", opts.peers,
                opts.orderers, opts.mode.c_str(), opts.crypto.c_str());
    std::printf("submit port:   %u\n", server.submit_port());
    for (size_t i = 0; i < net.peer_count(); ++i)
        std::printf("peer %zu events: %u\n", i, server.event_port(i));
    std::printf("admin port:    %u  (GET /status, POST /checkpoint)\n", server.admin_port());
    std::fflush(stdout);

    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    while (!g_stop.load()) std::this_thread::sleep_for(std::chrono::milliseconds(100));

    server.stop();
    net.stop();
    return 0;
}

int cmd_bench_run(const NetOptions& opts, const std::string& workload, uint64_t ops,
                  uint32_t clients, uint64_t seed, const std::string& out,
                  double working_set_fraction) {
    auto kind = brook::parse_workload(workload);
    if (!kind) {
        std::fprintf(stderr, "unknown workload %s\n", workload.c_str());
        return 2;
    }
    brook::WorkloadSpec spec;
    spec.kind = *kind;
    spec.total_ops = ops;
    spec.clients = clients;
    spec.seed = seed;
    spec.working_set_fraction = working_set_fraction;

    auto cfg = opts.to_config();
    cfg.seed = seed;
    brook::Network net(cfg);
    net.start();
    auto report = brook::run_closed_loop(net, spec);
    net.stop();

    std::printf("%s", brook::summarize(report).c_str());
    std::printf("endorsement path: in-process\n");
    if (!out.empty()) {
        brook::write_csv(report, out);
        std::printf("per-op records: %s\n", out.c_str());
    }
    std::printf("ledger: %s\n", net.peer_ledger_path(0).string().c_str());
    return 0;
}

int cmd_ledger_verify(const std::string& path) {
    auto records = brook::load_ledger_strict(path);
    if (!records) {
        std::printf("framing BROKEN\n");
        return 1;
    }
    bool chain_ok = brook::verify_chain(*records);
    bool flags_ok = chain_ok && brook::replay_records(*records).matches_recorded();
    std::printf("%zu records, chain %s, validity flags %s\n", records->size(),
                chain_ok ? "OK" : "BROKEN", flags_ok ? "OK" : "BROKEN");
    return chain_ok && flags_ok ? 0 : 1;
}

int cmd_ledger_replay(const std::string& path) {
    auto result = brook::replay_ledger_file(path);
    uint64_t valid = 0;
    for (auto v : result.validity) valid += v;
    std::printf("%llu records replayed: %llu valid, %llu invalid\n",
                static_cast<unsigned long long>(result.records),
                static_cast<unsigned long long>(valid),
                static_cast<unsigned long long>(result.records - valid));
    std::printf("state digest: %s\n",
                brook::to_hex(brook::Bytes(result.state_digest.begin(), result.state_digest.end()))
                    .c_str());
    bool match = result.matches_recorded();
    std::printf("recorded validity flags: %s\n", match ? "MATCH" : "MISMATCH");
    return match ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"blockless streaming ledger"};
    app.set_config("--config", "", "plain-text key=value config file");
    app.require_subcommand(1);

    auto* net = app.add_subcommand("net", "run a network");
    auto* net_start = net->add_subcommand("start", "start peers + orderers and serve sockets");
    NetOptions net_opts;
    net_opts.attach(net_start);

    auto* bench = app.add_subcommand("bench", "benchmarks");
    auto* bench_run = bench->add_subcommand("run", "closed-loop benchmark run");
    NetOptions bench_opts;
    bench_opts.attach(bench_run);
    std::string workload = "ycsb90";
    uint64_t ops = 10000;
    uint32_t clients = 1;
    uint64_t seed = 1;
    std::string out_csv;
    double wsf = 1.0;
    bench_run->add_option("--workload", workload, "ycsb90|ycsb50|scm95|scm99");
    bench_run->add_option("--ops", ops, "total operations")->check(CLI::PositiveNumber);
    bench_run->add_option("--clients", clients, "closed-loop clients")
        ->check(CLI::PositiveNumber);
    bench_run->add_option("--seed", seed, "run seed");
    bench_run->add_option("--out", out_csv, "per-op CSV path");
    bench_run->add_option("--working-set", wsf, "fraction of the key space touched")
        ->check(CLI::Range(0.000001, 1.0));

    auto* ledger = app.add_subcommand("ledger", "ledger inspection");
    auto* verify = ledger->add_subcommand("verify", "hash chain verification");
    auto* replay = ledger->add_subcommand("replay", "serial re-execution oracle");
    std::string verify_path, replay_path;
    verify->add_option("--path", verify_path, "ledger file")->required();
    replay->add_option("--path", replay_path, "ledger file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (net_start->parsed()) return cmd_net_start(net_opts);
        if (bench_run->parsed())
            return cmd_bench_run(bench_opts, workload, ops, clients, seed, out_csv, wsf);
        if (verify->parsed()) return cmd_ledger_verify(verify_path);
        if (replay->parsed()) return cmd_ledger_replay(replay_path);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    std::fprintf(stderr, "missing subcommand\n");
    return 2;
}
