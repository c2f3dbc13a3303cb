#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <fstream>
#include <map>
#include <thread>

#include "common/clock.hpp"
#include "common/sha256.hpp"
#include "net/tcp.hpp"
#include "ordering/block_cutter.hpp"
#include "ordering/raft.hpp"
#include "ordering/raft_service.hpp"
#include "ordering/solo.hpp"
#include "ordering/wire.hpp"
#include "util.hpp"

using namespace brook;
using brook::testutil::TempDir;

namespace {

std::vector<uint16_t> pick_ports(size_t n) {
    // Bind-then-release; raft nodes rebind the same ports right away.
    std::vector<std::unique_ptr<TcpListener>> holders;
    std::vector<uint16_t> ports;
    for (size_t i = 0; i < n; ++i) {
        holders.push_back(std::make_unique<TcpListener>(0));
        ports.push_back(holders.back()->port());
    }
    holders.clear();
    return ports;
}

int wait_for_leader(std::vector<std::unique_ptr<RaftNode>>& nodes, int timeout_ms,
                    int skip = -1) {
    auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    while (std::chrono::steady_clock::now() < deadline) {
        for (size_t i = 0; i < nodes.size(); ++i) {
            if (static_cast<int>(i) == skip || !nodes[i]) continue;
            if (nodes[i]->is_leader()) return static_cast<int>(i);
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    return -1;
}

std::vector<std::unique_ptr<RaftNode>> make_cluster(const TempDir& dir,
                                                    const std::vector<uint16_t>& ports) {
    std::vector<std::unique_ptr<RaftNode>> nodes;
    for (size_t i = 0; i < ports.size(); ++i) {
        RaftNodeConfig cfg;
        cfg.id = static_cast<uint32_t>(i);
        cfg.ports = ports;
        cfg.data_dir = dir.path / ("node" + std::to_string(i));
        cfg.batcher.flush_timeout_ms = 5;
        cfg.batcher.fsync = FsyncPolicy::kNever;
        nodes.push_back(std::make_unique<RaftNode>(cfg));
    }
    for (auto& n : nodes) n->start();
    return nodes;
}

}  // namespace

TEST_CASE("wire messages roundtrip through encode/decode") {
    Msg m;
    m.type = MsgType::kSubmit;
    m.payload = to_bytes("payload");
    Msg back = decode_msg(m.type, encode_msg(m));
    CHECK(back.payload == m.payload);

    m = Msg{};
    m.type = MsgType::kSubmitAck;
    m.submit_status = SubmitStatus::kNotLeader;
    m.leader_hint = 2;
    m.seq = 77;
    back = decode_msg(m.type, encode_msg(m));
    CHECK(back.submit_status == SubmitStatus::kNotLeader);
    CHECK(back.leader_hint == 2);
    CHECK(back.seq == 77);

    m = Msg{};
    m.type = MsgType::kFetch;
    m.seq = UINT64_MAX;
    m.wait = 1;
    back = decode_msg(m.type, encode_msg(m));
    CHECK(back.seq == UINT64_MAX);
    CHECK(back.wait == 1);

    m = Msg{};
    m.type = MsgType::kDeliver;
    m.deliver_status = DeliverStatus::kEntry;
    m.seq = 5;
    m.payload = to_bytes("tx");
    m.payload_hash = sha256(m.payload);
    back = decode_msg(m.type, encode_msg(m));
    CHECK(back.seq == 5);
    CHECK(back.payload == m.payload);
    CHECK(back.payload_hash == m.payload_hash);

    m = Msg{};
    m.type = MsgType::kAppend;
    m.term = 3;
    m.node_id = 1;
    m.prev_seq = 9;
    m.prev_term = 2;
    m.commit_seq = 8;
    RaftLogEntry e;
    e.seq = 10;
    e.term = 3;
    e.payload = to_bytes("entry");
    e.payload_hash = sha256(e.payload);
    m.entries = {e};
    back = decode_msg(m.type, encode_msg(m));
    CHECK(back.term == 3);
    CHECK(back.node_id == 1);
    CHECK(back.prev_seq == 9);
    CHECK(back.prev_term == 2);
    CHECK(back.commit_seq == 8);
    REQUIRE(back.entries.size() == 1);
    CHECK(back.entries[0].seq == 10);
    CHECK(back.entries[0].term == 3);
    CHECK(back.entries[0].payload == e.payload);
    CHECK(back.entries[0].payload_hash == e.payload_hash);

    m = Msg{};
    m.type = MsgType::kAppendAck;
    m.term = 4;
    m.success = 1;
    m.match_seq = 10;
    back = decode_msg(m.type, encode_msg(m));
    CHECK(back.term == 4);
    CHECK(back.success == 1);
    CHECK(back.match_seq == 10);

    m = Msg{};
    m.type = MsgType::kVoteReq;
    m.term = 6;
    m.node_id = 2;
    m.prev_seq = 12;
    m.prev_term = 5;
    back = decode_msg(m.type, encode_msg(m));
    CHECK(back.term == 6);
    CHECK(back.node_id == 2);
    CHECK(back.prev_seq == 12);
    CHECK(back.prev_term == 5);

    m = Msg{};
    m.type = MsgType::kVoteResp;
    m.term = 6;
    m.success = 1;
    back = decode_msg(m.type, encode_msg(m));
    CHECK(back.term == 6);
    CHECK(back.success == 1);
}

TEST_CASE("wire frames survive a real socket hop") {
    TcpListener listener(0);
    std::unique_ptr<TcpConn> server;
    std::thread accepter([&] { server = listener.accept(); });
    auto client = TcpConn::connect("127.0.0.1", listener.port());
    REQUIRE(client);
    accepter.join();
    REQUIRE(server);

    Msg m;
    m.type = MsgType::kSubmit;
    m.payload = Bytes(10000, 0x42);
    REQUIRE(send_msg(*client, m));
    auto got = recv_msg(*server);
    REQUIRE(got.has_value());
    CHECK(got->type == MsgType::kSubmit);
    CHECK(got->payload == m.payload);

    client->shutdown();
    CHECK_FALSE(recv_msg(*server).has_value());
}

TEST_CASE("block cutter cuts on size, timeout, and shutdown") {
    BlockCutter cutter(3, std::chrono::milliseconds(100));
    auto entry = [](uint64_t seq) {
        OrderedEntry e;
        e.seq = seq;
        e.payload = to_bytes("p" + std::to_string(seq));
        return e;
    };

    int64_t t0 = 1'000'000'000;
    CHECK_FALSE(cutter.add(entry(1), t0).has_value());
    CHECK_FALSE(cutter.add(entry(2), t0 + 1).has_value());
    CHECK_FALSE(cutter.poll(t0 + 2).has_value());
    auto blk = cutter.add(entry(3), t0 + 3);
    REQUIRE(blk.has_value());
    CHECK(blk->block_no == 1);
    CHECK(blk->cut_reason == CutReason::kSize);
    REQUIRE(blk->entries.size() == 3);
    CHECK(blk->entries[0].seq == 1);
    CHECK(blk->entries[2].seq == 3);
    CHECK(cutter.pending() == 0);
    CHECK_FALSE(cutter.deadline_ns().has_value());

    // Timeout runs from the oldest pending entry.
    CHECK_FALSE(cutter.add(entry(4), t0 + 10).has_value());
    auto deadline = cutter.deadline_ns();
    REQUIRE(deadline.has_value());
    CHECK(*deadline == t0 + 10 + 100'000'000);
    CHECK_FALSE(cutter.poll(*deadline - 1).has_value());
    auto timed = cutter.poll(*deadline);
    REQUIRE(timed.has_value());
    CHECK(timed->block_no == 2);
    CHECK(timed->cut_reason == CutReason::kTimeout);
    REQUIRE(timed->entries.size() == 1);
    CHECK(timed->entries[0].seq == 4);

    CHECK_FALSE(cutter.cut_remaining().has_value());
    cutter.add(entry(5), t0 + 500);
    auto rest = cutter.cut_remaining();
    REQUIRE(rest.has_value());
    CHECK(rest->entries.size() == 1);
}

TEST_CASE("solo orderer assigns gapless seqs and recovers its log") {
    TempDir dir("solo");
    BatcherConfig batcher;
    batcher.flush_timeout_ms = 5;
    batcher.fsync = FsyncPolicy::kNever;

    std::vector<Bytes> payloads;
    {
        SoloOrderer solo(dir.path, batcher);
        auto stream = solo.subscribe(1);

        std::vector<OrderedEntry> delivered;
        std::thread subscriber([&] {
            OrderedEntry e;
            while (stream->next(e)) delivered.push_back(e);
        });

        for (uint64_t i = 1; i <= 20; ++i) {
            Bytes p = to_bytes("tx" + std::to_string(i));
            payloads.push_back(p);
            CHECK(solo.order(p) == i);
        }
        CHECK_THROWS(solo.order(Bytes{}));

        auto got = solo.get(7);
        REQUIRE(got.has_value());
        CHECK(got->payload == payloads[6]);
        CHECK(got->payload_hash == sha256(payloads[6]));
        CHECK_FALSE(solo.get(0).has_value());
        CHECK_FALSE(solo.get(21).has_value());
        CHECK(solo.get_last()->seq == 20);

        while (delivered.size() < 20) std::this_thread::sleep_for(std::chrono::milliseconds(5));
        stream->stop();
        subscriber.join();
        for (size_t i = 0; i < 20; ++i) {
            CHECK(delivered[i].seq == i + 1);
            CHECK(delivered[i].payload == payloads[i]);
        }
        solo.shutdown();
        CHECK_THROWS_AS(solo.order(to_bytes("late")), OrderingTimeout);
    }

    // Reopen: the full log is back, seq numbering continues.
    {
        SoloOrderer solo(dir.path, batcher);
        CHECK(solo.get_last()->seq == 20);
        CHECK(solo.get(3)->payload == payloads[2]);
        CHECK(solo.order(to_bytes("more")) == 21);
    }

    // Torn tail: garbage appended to the log file disappears on recovery.
    {
        std::ofstream out(dir.path / "orderer.dat", std::ios::binary | std::ios::app);
        Bytes junk = {0xff, 0xff, 0xff};
        out.write(reinterpret_cast<const char*>(junk.data()), 3);
    }
    SoloOrderer solo(dir.path, batcher);
    CHECK(solo.get_last()->seq == 21);
}

TEST_CASE("raft cluster elects a leader and replicates to every node") {
    TempDir dir("raft-basic");
    auto ports = pick_ports(3);
    auto nodes = make_cluster(dir, ports);
    REQUIRE(wait_for_leader(nodes, 10000) >= 0);

    RaftOrderingClient client(ports, 10000);
    std::vector<Bytes> payloads;
    for (int i = 0; i < 30; ++i) {
        Bytes p = to_bytes("entry" + std::to_string(i));
        uint64_t seq = client.order(p);
        CHECK(seq == static_cast<uint64_t>(i + 1));
        payloads.push_back(p);
    }

    // Every node eventually serves every committed entry with the same
    // payload and hash.
    for (size_t n = 0; n < nodes.size(); ++n) {
        RaftOrderingClient one({ports[n]}, 10000);
        for (uint64_t seq = 1; seq <= payloads.size(); ++seq) {
            auto e = one.get_blocking(seq);
            REQUIRE(e.has_value());
            CHECK(e->seq == seq);
            CHECK(e->payload == payloads[seq - 1]);
            CHECK(e->payload_hash == sha256(payloads[seq - 1]));
        }
    }
    auto last = client.get_last();
    REQUIRE(last.has_value());
    CHECK(last->seq == payloads.size());
    CHECK_FALSE(client.get(999).has_value());

    for (auto& n : nodes) n->stop();
}

TEST_CASE("raft delivery stream follows the committed log in order") {
    TempDir dir("raft-stream");
    auto ports = pick_ports(3);
    auto nodes = make_cluster(dir, ports);
    REQUIRE(wait_for_leader(nodes, 10000) >= 0);

    RaftOrderingClient client(ports, 10000);
    auto stream = client.subscribe(1);
    std::vector<OrderedEntry> delivered;
    std::thread subscriber([&] {
        OrderedEntry e;
        while (stream->next(e)) delivered.push_back(e);
    });

    for (int i = 0; i < 15; ++i) client.order(to_bytes("s" + std::to_string(i)));
    auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(15);
    while (delivered.size() < 15 && std::chrono::steady_clock::now() < deadline)
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    stream->stop();
    subscriber.join();

    REQUIRE(delivered.size() >= 15);
    for (size_t i = 0; i < delivered.size(); ++i) {
        CHECK(delivered[i].seq == i + 1);
        CHECK(delivered[i].payload == to_bytes("s" + std::to_string(i)));
    }
    for (auto& n : nodes) n->stop();
}

TEST_CASE("raft survives a follower crash and catches it up after restart") {
    TempDir dir("raft-follower");
    auto ports = pick_ports(3);
    auto nodes = make_cluster(dir, ports);
    int leader = wait_for_leader(nodes, 10000);
    REQUIRE(leader >= 0);

    RaftOrderingClient client(ports, 10000);
    for (int i = 0; i < 10; ++i) client.order(to_bytes("pre" + std::to_string(i)));

    int victim = (leader + 1) % 3;
    nodes[victim]->kill();

    // Majority still makes progress.
    for (int i = 0; i < 10; ++i) client.order(to_bytes("mid" + std::to_string(i)));

    // Restart the follower from its data dir; it must catch up.
    RaftNodeConfig cfg;
    cfg.id = static_cast<uint32_t>(victim);
    cfg.ports = ports;
    cfg.data_dir = dir.path / ("node" + std::to_string(victim));
    cfg.batcher.flush_timeout_ms = 5;
    cfg.batcher.fsync = FsyncPolicy::kNever;
    nodes[victim] = std::make_unique<RaftNode>(cfg);
    nodes[victim]->start();

    for (int i = 0; i < 5; ++i) client.order(to_bytes("post" + std::to_string(i)));

    RaftOrderingClient direct({ports[victim]}, 15000);
    auto e = direct.get_blocking(25);
    REQUIRE(e.has_value());
    CHECK(e->payload == to_bytes("post4"));
    for (uint64_t seq = 1; seq <= 25; ++seq) {
        auto entry = direct.get_blocking(seq);
        REQUIRE(entry.has_value());
        CHECK(entry->seq == seq);
    }
    for (auto& n : nodes) n->stop();
}

TEST_CASE("raft elects a new leader after a leader crash without losing acks") {
    TempDir dir("raft-leader");
    auto ports = pick_ports(3);
    auto nodes = make_cluster(dir, ports);
    int leader = wait_for_leader(nodes, 10000);
    REQUIRE(leader >= 0);

    RaftOrderingClient client(ports, 15000);
    std::map<uint64_t, Bytes> acked;
    for (int i = 0; i < 10; ++i) {
        Bytes p = to_bytes("a" + std::to_string(i));
        acked[client.order(p)] = p;
    }

    nodes[leader]->kill();
    nodes[leader].reset();

    int next = wait_for_leader(nodes, 10000, leader);
    CHECK(next >= 0);
    CHECK(next != leader);

    for (int i = 0; i < 10; ++i) {
        Bytes p = to_bytes("b" + std::to_string(i));
        uint64_t seq = client.order(p);
        CHECK(acked.find(seq) == acked.end());    // no seq handed out twice
        acked[seq] = p;
    }

    // Audit on both survivors: every acked seq serves the acked payload.
    for (size_t n = 0; n < nodes.size(); ++n) {
        if (!nodes[n]) continue;
        RaftOrderingClient one({ports[n]}, 15000);
        for (const auto& [seq, payload] : acked) {
            auto e = one.get_blocking(seq);
            REQUIRE(e.has_value());
            CHECK(e->payload == payload);
        }
    }
    for (auto& n : nodes)
        if (n) n->stop();
}
