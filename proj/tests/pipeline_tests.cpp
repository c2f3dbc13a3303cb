#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <future>
#include <random>
#include <thread>

#include "common/sha256.hpp"
#include "ledger/chain.hpp"
#include "validator/deser_cache.hpp"
#include "validator/pipeline.hpp"
#include "validator/replay.hpp"
#include "util.hpp"

using namespace brook;
using brook::testutil::TempDir;
using brook::testutil::TxFactory;

namespace {

BatcherConfig test_batcher() {
    BatcherConfig b;
    b.flush_timeout_ms = 10;
    b.fsync = FsyncPolicy::kNever;
    return b;
}

struct Rig {
    TxFactory factory;
    TempDir dir;
    StateDb db;
    AppendLog ledger;
    PipelineConfig config;

    explicit Rig(PipelineConfig cfg, CryptoMode mode = CryptoMode::kNull,
                 BatcherConfig batcher = test_batcher())
        : factory(mode), dir("pipeline"), db(64),
          ledger(dir.path / "ledger.dat", batcher), config(cfg) {
        config.crypto = mode;
    }

    std::unique_ptr<Pipeline> make_pipeline() {
        return std::make_unique<Pipeline>(config, db, ledger, factory.policy, factory.roster,
                                          factory.client.public_key);
    }
};

// Transcript of independent single-key writes: every tx valid regardless of
// commit interleaving.
std::vector<OrderedEntry> distinct_write_transcript(TxFactory& f, size_t n) {
    std::vector<OrderedEntry> entries;
    entries.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        Transaction tx = f.make_tx(TxFactory::kv_write("insert", "key" + std::to_string(i),
                                                       "val" + std::to_string(i)));
        entries.push_back(TxFactory::entry_for(i + 1, tx));
    }
    return entries;
}

// Transcript with contention: repeated writes to few keys endorsed against
// a stale view, so a deterministic subset fails MVCC.
std::vector<OrderedEntry> contended_transcript(TxFactory& f, size_t n) {
    std::vector<OrderedEntry> entries;
    for (size_t i = 0; i < n; ++i) {
        Transaction tx = f.make_tx(TxFactory::kv_write(
            "update", "hot" + std::to_string(i % 5), "v" + std::to_string(i)));
        entries.push_back(TxFactory::entry_for(i + 1, tx));
        if (i % 3 == 0) f.advance(tx, i + 1);    // freshen the view sometimes
    }
    return entries;
}

}  // namespace

TEST_CASE("commit event frames roundtrip with the documented layout") {
    CommitEvent ev;
    ev.seq = 0x0102030405060708ull;
    ev.valid = true;
    for (size_t i = 0; i < ev.tx_id.size(); ++i) ev.tx_id[i] = static_cast<uint8_t>(i);
    ev.received_ns = 111;
    ev.verified_ns = 222;
    ev.committed_ns = 333;

    Bytes frame = frame_commit_event(ev);
    REQUIRE(frame.size() == 4 + 49);
    CHECK(frame[0] == 49);    // u32 len, little-endian

    CommitEvent back = unframe_commit_event(frame);
    CHECK(back.seq == ev.seq);
    CHECK(back.valid == ev.valid);
    CHECK(back.tx_id == ev.tx_id);
    CHECK(back.received_ns == 111);
    CHECK(back.verified_ns == 222);
    CHECK(back.committed_ns == 333);

    Bytes bad = frame;
    bad[0] = 48;
    CHECK_THROWS_AS(unframe_commit_event(bad), CodecError);
}

TEST_CASE("deser cache hits, evicts LRU, and tolerates garbage") {
    TxFactory f;
    Transaction tx = f.make_tx(TxFactory::kv_write("insert", "a", "b"));
    Bytes payload = serialize_tx(tx);
    Hash32 h = sha256(payload);

    DeserCache cache(2);
    auto first = cache.get(h, payload);
    REQUIRE(first);
    CHECK(*first == tx);
    CHECK(cache.misses() == 1);
    auto second = cache.get(h, payload);
    CHECK(second.get() == first.get());    // same shared object
    CHECK(cache.hits() == 1);

    // Fill past capacity; the least recently used entry falls out.
    Transaction tx2 = f.make_tx(TxFactory::kv_write("insert", "c", "d"));
    Bytes p2 = serialize_tx(tx2);
    Transaction tx3 = f.make_tx(TxFactory::kv_write("insert", "e", "f"));
    Bytes p3 = serialize_tx(tx3);
    cache.get(sha256(p2), p2);
    cache.get(sha256(p3), p3);    // evicts h (p2 was more recent? no: h was touched last before p2)
    CHECK(cache.size() == 2);

    Bytes junk = {1, 2, 3};
    CHECK(cache.get(sha256(junk), junk) == nullptr);

    DeserCache off(0);
    CHECK(off.get(h, payload) != nullptr);
    CHECK(off.get(h, payload) != nullptr);
    CHECK(off.hits() == 0);
    CHECK(off.misses() == 2);
    CHECK(off.size() == 0);
}

TEST_CASE("pipeline recollects FIFO order under adversarial stage-1 delays") {
    PipelineConfig cfg;
    cfg.sig_workers = 16;
    cfg.queue_capacity = 64;
    cfg.mode = DeliveryMode::kStream;
    cfg.stage1_hook = [](uint64_t seq) {
        thread_local std::mt19937 rng(std::hash<std::thread::id>{}(std::this_thread::get_id()));
        // Aggressively randomized per-entry delay, including occasional
        // long stalls, to scramble worker completion order.
        uint32_t us = rng() % 120;
        if (seq % 97 == 0) us += 2000;
        std::this_thread::sleep_for(std::chrono::microseconds(us));
    };
    Rig rig(cfg);
    auto entries = distinct_write_transcript(rig.factory, 10000);

    auto pipeline = rig.make_pipeline();
    std::vector<uint64_t> event_seqs;
    pipeline->add_commit_handler([&](const CommitEvent& ev) { event_seqs.push_back(ev.seq); });
    pipeline->start();
    for (const auto& e : entries) pipeline->feed(e);
    pipeline->stop();

    CHECK_FALSE(pipeline->halted());
    CHECK(pipeline->last_committed_seq() == 10000);
    CHECK(pipeline->metrics().committed.load() == 10000);
    CHECK(pipeline->metrics().valid.load() == 10000);
    CHECK(pipeline->metrics().sig_failures.load() == 0);

    // Commit events arrived strictly in seq order.
    REQUIRE(event_seqs.size() == 10000);
    for (size_t i = 0; i < event_seqs.size(); ++i) REQUIRE(event_seqs[i] == i + 1);

    // The ledger is the same order, gapless, with an intact chain.
    rig.ledger.close();
    auto records = load_ledger(rig.dir.path / "ledger.dat");
    REQUIRE(records.size() == 10000);
    CHECK(verify_chain(records));
    for (size_t i = 0; i < records.size(); ++i) {
        REQUIRE(records[i].seq == i + 1);
        CHECK(records[i].valid);
    }
}

TEST_CASE("a stalled commit handler does not block stage 2 until the queue bound") {
    PipelineConfig cfg;
    cfg.sig_workers = 4;
    cfg.queue_capacity = 32;
    cfg.mode = DeliveryMode::kStream;
    Rig rig(cfg);
    auto entries = distinct_write_transcript(rig.factory, 100);

    std::promise<void> release;
    std::shared_future<void> gate(release.get_future());
    std::atomic<uint64_t> handled{0};
    auto pipeline = rig.make_pipeline();
    pipeline->add_commit_handler([&](const CommitEvent&) {
        if (handled.fetch_add(1) == 0) gate.wait();    // first event blocks stage 3
    });
    pipeline->start();
    std::thread feeder([&] {
        for (const auto& e : entries) pipeline->feed(e);
    });

    // Stage 2 keeps committing while stage 3 is stuck, until the event
    // queue (capacity 32) fills: 1 event in the handler + 32 queued.
    auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(5);
    while (pipeline->last_committed_seq() < 33 &&
           std::chrono::steady_clock::now() < deadline)
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    uint64_t stalled_at = pipeline->last_committed_seq();
    CHECK(stalled_at >= 33);
    CHECK(stalled_at <= 40);    // far from 100: backpressure engaged
    CHECK(handled.load() == 1);

    release.set_value();
    feeder.join();
    pipeline->stop();
    CHECK(pipeline->last_committed_seq() == 100);
    CHECK(handled.load() == 100);
}

TEST_CASE("deser cache on/off yields identical decisions and state") {
    // Repeated payloads: the same serialized tx delivered at two seqs.
    TxFactory shared_factory;
    std::vector<OrderedEntry> entries;
    for (size_t i = 0; i < 100; ++i) {
        Transaction tx = shared_factory.make_tx(
            TxFactory::kv_write("insert", "dup" + std::to_string(i), "v"));
        entries.push_back(TxFactory::entry_for(2 * i + 1, tx));
        entries.push_back(TxFactory::entry_for(2 * i + 2, tx));    // same payload, new seq
    }

    Hash32 digests[2];
    std::vector<uint8_t> validity[2];
    uint64_t hits[2];
    for (int pass = 0; pass < 2; ++pass) {
        PipelineConfig cfg;
        cfg.sig_workers = 4;
        cfg.queue_capacity = 32;
        cfg.deser_cache_capacity = pass == 0 ? 0 : 4096;
        Rig rig(cfg);
        auto pipeline = rig.make_pipeline();
        pipeline->add_commit_handler(
            [&, pass](const CommitEvent& ev) { validity[pass].push_back(ev.valid ? 1 : 0); });
        pipeline->start();
        for (const auto& e : entries) pipeline->feed(e);
        pipeline->stop();
        digests[pass] = rig.db.digest();
        hits[pass] = pipeline->cache_hits();
    }
    CHECK(hits[0] == 0);
    CHECK(hits[1] == 100);    // each duplicate payload hit once
    CHECK(digests[0] == digests[1]);
    REQUIRE(validity[0].size() == 200);
    CHECK(validity[0] == validity[1]);
    // The duplicate of each tx re-reads a version that changed: invalid.
    for (size_t i = 0; i < 200; ++i) CHECK(validity[0][i] == (i % 2 == 0 ? 1 : 0));
}

TEST_CASE("stream and block modes produce identical ledgers and state") {
    TxFactory f_stream, f_block;
    auto entries_s = contended_transcript(f_stream, 200);
    auto entries_b = contended_transcript(f_block, 200);
    REQUIRE(entries_s.size() == entries_b.size());
    for (size_t i = 0; i < entries_s.size(); ++i)
        REQUIRE(entries_s[i].payload == entries_b[i].payload);    // same transcript

    PipelineConfig scfg;
    scfg.sig_workers = 6;
    scfg.queue_capacity = 64;
    scfg.mode = DeliveryMode::kStream;
    Rig stream_rig(scfg);
    auto sp = stream_rig.make_pipeline();
    sp->start();
    for (const auto& e : entries_s) sp->feed(e);
    sp->stop();

    PipelineConfig bcfg = scfg;
    bcfg.mode = DeliveryMode::kBlock;
    BatcherConfig no_auto_flush;
    no_auto_flush.flush_bytes = 1 << 30;
    no_auto_flush.flush_timeout_ms = 600000;
    no_auto_flush.fsync = FsyncPolicy::kNever;
    Rig block_rig(bcfg, CryptoMode::kNull, no_auto_flush);
    auto bp = block_rig.make_pipeline();
    std::vector<CommitEvent> block_events;
    bp->add_commit_handler([&](const CommitEvent& ev) { block_events.push_back(ev); });
    bp->start();
    uint64_t flushes_before = block_rig.ledger.metrics().flush_count.load();
    for (size_t i = 0; i < entries_b.size(); i += 10) {
        Block blk;
        blk.block_no = i / 10 + 1;
        blk.entries.assign(entries_b.begin() + i, entries_b.begin() + i + 10);
        bp->feed_block(blk);
    }
    bp->stop();

    // One durability flush per block, and whole-block commit timestamps.
    CHECK(block_rig.ledger.metrics().flush_count.load() - flushes_before == 20);
    REQUIRE(block_events.size() == 200);
    for (size_t i = 0; i < 200; i += 10)
        for (size_t j = 1; j < 10; ++j)
            CHECK(block_events[i + j].committed_ns == block_events[i].committed_ns);

    CHECK(sp->chain_head() == bp->chain_head());
    CHECK(stream_rig.db.digest() == block_rig.db.digest());

    stream_rig.ledger.close();
    block_rig.ledger.close();
    auto rec_s = load_ledger(stream_rig.dir.path / "ledger.dat");
    auto rec_b = load_ledger(block_rig.dir.path / "ledger.dat");
    REQUIRE(rec_s.size() == rec_b.size());
    for (size_t i = 0; i < rec_s.size(); ++i) {
        CHECK(rec_s[i].seq == rec_b[i].seq);
        CHECK(rec_s[i].valid == rec_b[i].valid);
        CHECK(rec_s[i].chain_hash == rec_b[i].chain_hash);
        CHECK(rec_s[i].tx_bytes == rec_b[i].tx_bytes);
    }
}

TEST_CASE("signature failures and garbage payloads are slotted, not dropped") {
    PipelineConfig cfg;
    cfg.sig_workers = 2;
    cfg.queue_capacity = 16;
    Rig rig(cfg, CryptoMode::kReal);

    Transaction good = rig.factory.make_tx(TxFactory::kv_write("insert", "g", "1"));
    Transaction tampered = rig.factory.make_tx(TxFactory::kv_write("insert", "t", "2"));
    tampered.client_sig[0] ^= 1;

    std::vector<OrderedEntry> entries;
    entries.push_back(TxFactory::entry_for(1, good));
    entries.push_back(TxFactory::entry_for(2, tampered));
    OrderedEntry garbage;
    garbage.seq = 3;
    garbage.payload = {0xde, 0xad, 0xbe, 0xef};
    garbage.payload_hash = sha256(garbage.payload);
    entries.push_back(garbage);
    Transaction tail = rig.factory.make_tx(TxFactory::kv_write("insert", "z", "3"));
    entries.push_back(TxFactory::entry_for(4, tail));

    auto pipeline = rig.make_pipeline();
    std::vector<CommitEvent> events;
    pipeline->add_commit_handler([&](const CommitEvent& ev) { events.push_back(ev); });
    pipeline->start();
    for (const auto& e : entries) pipeline->feed(e);
    pipeline->stop();

    CHECK(pipeline->metrics().committed.load() == 4);
    CHECK(pipeline->metrics().sig_failures.load() == 2);
    REQUIRE(events.size() == 4);
    CHECK(events[0].valid);
    CHECK_FALSE(events[1].valid);
    CHECK_FALSE(events[2].valid);
    CHECK(events[3].valid);

    // Invalid transactions left no trace in the store.
    CHECK_FALSE(rig.db.get(make_key("kv", "t")).has_value());
    CHECK(rig.db.get(make_key("kv", "g")).has_value());

    // All four records are in the ledger; the chain covers the garbage too.
    rig.ledger.close();
    auto records = load_ledger(rig.dir.path / "ledger.dat");
    REQUIRE(records.size() == 4);
    CHECK(verify_chain(records));
    CHECK_FALSE(records[1].valid);
    CHECK_FALSE(records[2].valid);
}

TEST_CASE("pipeline halts fail-stop when the ledger breaks") {
    PipelineConfig cfg;
    cfg.sig_workers = 1;
    cfg.queue_capacity = 8;
    Rig rig(cfg);
    auto entries = distinct_write_transcript(rig.factory, 3);

    auto pipeline = rig.make_pipeline();
    pipeline->start();
    pipeline->feed(entries[0]);
    while (pipeline->last_committed_seq() < 1)
        std::this_thread::sleep_for(std::chrono::milliseconds(1));
    rig.ledger.close();    // simulated persistence failure
    pipeline->feed(entries[1]);
    auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(5);
    while (!pipeline->halted() && std::chrono::steady_clock::now() < deadline)
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    CHECK(pipeline->halted());
    CHECK(pipeline->last_committed_seq() == 1);
    pipeline->stop();
}

TEST_CASE("serial replay reproduces the pipeline's decisions byte for byte") {
    PipelineConfig cfg;
    cfg.sig_workers = 8;
    cfg.queue_capacity = 64;
    Rig rig(cfg, CryptoMode::kReal);
    auto entries = contended_transcript(rig.factory, 150);

    auto pipeline = rig.make_pipeline();
    pipeline->start();
    for (const auto& e : entries) pipeline->feed(e);
    pipeline->stop();
    uint64_t valid = pipeline->metrics().valid.load();
    uint64_t invalid = pipeline->metrics().invalid.load();
    CHECK(valid + invalid == 150);
    CHECK(invalid > 0);    // the transcript really contains conflicts
    Hash32 live_digest = rig.db.digest();
    rig.ledger.close();

    auto path = rig.dir.path / "ledger.dat";
    SigCheck sig = [&](const Transaction& tx) {
        return verify_endorsement(tx, rig.factory.policy, rig.factory.roster,
                                  CryptoMode::kReal, rig.factory.client.public_key);
    };
    ReplayResult replay = replay_ledger_file(path, sig);
    CHECK(replay.records == 150);
    CHECK(replay.matches_recorded());
    CHECK(replay.state_digest == live_digest);
    CHECK(verify_ledger_file(path, sig));

    // Flipping one recorded validity flag is caught by the replay compare.
    auto records = load_ledger(path);
    records[17].valid = !records[17].valid;
    ReplayResult tampered = replay_records(records, sig);
    CHECK_FALSE(tampered.matches_recorded());
}
