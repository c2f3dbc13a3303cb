#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <map>
#include <random>
#include <thread>

#include "common/bounded_queue.hpp"
#include "common/codec.hpp"
#include "common/sha256.hpp"
#include "ledger/chain.hpp"
#include "ledger/codec.hpp"
#include "persist/append_log.hpp"
#include "statedb/state_db.hpp"
#include "util.hpp"

using namespace brook;
using brook::testutil::TempDir;

namespace {

Bytes read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return Bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& p, const Bytes& content) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(content.data()),
              static_cast<std::streamsize>(content.size()));
    REQUIRE(out.good());
}

Transaction sample_tx(uint64_t n) {
    Transaction tx;
    tx.tx_id.fill(static_cast<uint8_t>(n));
    tx.chaincode_id = "kv";
    tx.args = {to_bytes("user" + std::to_string(n)), to_bytes("value")};
    tx.rwset.reads = {ReadEntry{make_key("kv", "a"), n},
                      ReadEntry{make_key("kv", "user" + std::to_string(n)), 0}};
    tx.rwset.writes = {WriteEntry{make_key("kv", "user" + std::to_string(n)), false,
                                  to_bytes("payload" + std::to_string(n))}};
    tx.endorsements = {Endorsement{"peer0", Bytes(64, 0x5a)}};
    tx.client_sig = Bytes(64, 0xa5);
    tx.submit_ts = static_cast<int64_t>(n) * 7;
    return tx;
}

}  // namespace

TEST_CASE("sha256 matches reference vectors") {
    CHECK(to_hex(sha256(Bytes{})) ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(to_hex(sha256(to_bytes("abc"))) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    Bytes a = to_bytes("ab");
    Bytes b = to_bytes("c");
    CHECK(sha256_concat(a.data(), a.size(), b.data(), b.size()) == sha256(to_bytes("abc")));
}

TEST_CASE("codec integers are little-endian with exact layout") {
    Writer w;
    w.u8(0xab);
    w.u16(0x0102);
    w.u32(0x01020304);
    w.u64(0x0102030405060708ull);
    Bytes expect = {0xab, 0x02, 0x01, 0x04, 0x03, 0x02, 0x01,
                    0x08, 0x07, 0x06, 0x05, 0x04, 0x03, 0x02, 0x01};
    CHECK(w.bytes() == expect);

    Reader r(w.bytes());
    CHECK(r.u8() == 0xab);
    CHECK(r.u16() == 0x0102);
    CHECK(r.u32() == 0x01020304);
    CHECK(r.u64() == 0x0102030405060708ull);
    CHECK(r.done());
}

TEST_CASE("codec blobs are u32-length-prefixed and truncation throws") {
    Writer w;
    w.blob(to_bytes("hello"));
    Bytes expect = {5, 0, 0, 0, 'h', 'e', 'l', 'l', 'o'};
    CHECK(w.bytes() == expect);

    Reader ok(w.bytes());
    CHECK(ok.blob() == to_bytes("hello"));

    Bytes torn(w.bytes().begin(), w.bytes().end() - 1);
    Reader bad(torn);
    CHECK_THROWS_AS(bad.blob(), CodecError);
}

TEST_CASE("transaction serialization is canonical and roundtrips") {
    Transaction tx = sample_tx(3);
    Bytes b1 = serialize_tx(tx);
    Bytes b2 = serialize_tx(tx);
    CHECK(b1 == b2);

    Transaction back = deserialize_tx(b1);
    CHECK(back == tx);

    // Structurally equal copies serialize identically.
    Transaction copy = back;
    CHECK(serialize_tx(copy) == b1);

    // Trailing garbage is rejected.
    Bytes extra = b1;
    extra.push_back(0);
    CHECK_THROWS_AS(deserialize_tx(extra), CodecError);
    Bytes short_buf(b1.begin(), b1.end() - 1);
    CHECK_THROWS_AS(deserialize_tx(short_buf), CodecError);
}

TEST_CASE("ledger record frame layout is bit-exact") {
    Transaction tx = sample_tx(1);
    LedgerRecord rec;
    rec.seq = 0x1122334455667788ull;
    rec.valid = true;
    rec.chain_hash.fill(0xcd);
    rec.tx_bytes = serialize_tx(tx);

    Bytes frame = frame_record(rec);
    REQUIRE(frame.size() == record_frame_size(rec.tx_bytes.size()));

    // [u32 len][u64 seq][u8 valid][32B hash][tx bytes]
    Reader r(frame);
    CHECK(r.u32() == 8 + 1 + 32 + rec.tx_bytes.size());
    CHECK(r.u64() == rec.seq);
    CHECK(r.u8() == 1);
    CHECK(r.hash() == rec.chain_hash);
    CHECK(Bytes(frame.end() - rec.tx_bytes.size(), frame.end()) == rec.tx_bytes);

    Bytes body(frame.begin() + 4, frame.end());
    LedgerRecord back = unframe_record(body);
    CHECK(back.seq == rec.seq);
    CHECK(back.valid == rec.valid);
    CHECK(back.chain_hash == rec.chain_hash);
    CHECK(back.tx_bytes == rec.tx_bytes);
}

TEST_CASE("chain hash matches an externally computed oracle") {
    CHECK(genesis_hash() == Hash32{});
    Hash32 h1 = chain_hash_fn(genesis_hash(), to_bytes("abc"));
    CHECK(to_hex(h1) == "365aa7d8f7f9402c4b9434502b4cc89ddb09fe50d7cd95b493b834c62d5a5370");
    Hash32 h2 = chain_hash_fn(h1, to_bytes("defgh"));
    CHECK(to_hex(h2) == "9771181dd4ef29cca2409b159efa31c45a1c6941d379be6bd86084f3e6cbc75f");
}

TEST_CASE("verify_chain accepts a well-formed chain and rejects mutations") {
    std::vector<LedgerRecord> records;
    Hash32 h = genesis_hash();
    for (uint64_t seq = 1; seq <= 8; ++seq) {
        LedgerRecord rec;
        rec.seq = seq;
        rec.valid = seq % 2 == 0;
        rec.tx_bytes = serialize_tx(sample_tx(seq));
        h = chain_hash_fn(h, rec.tx_bytes);
        rec.chain_hash = h;
        records.push_back(std::move(rec));
    }
    CHECK(verify_chain(records));

    auto broken = records;
    broken[3].tx_bytes[7] ^= 1;
    CHECK_FALSE(verify_chain(broken));

    broken = records;
    broken[5].chain_hash[0] ^= 1;
    CHECK_FALSE(verify_chain(broken));

    broken = records;
    broken[2].seq = 99;
    CHECK_FALSE(verify_chain(broken));

    broken = records;
    std::swap(broken[1], broken[2]);
    CHECK_FALSE(verify_chain(broken));

    broken = records;
    broken.erase(broken.begin());
    CHECK_FALSE(verify_chain(broken));
}

TEST_CASE("append log file bytes equal an unbatched oracle") {
    std::mt19937_64 rng(7);
    for (int round = 0; round < 4; ++round) {
        TempDir dir("batcher");
        BatcherConfig cfg;
        cfg.flush_bytes = round % 2 == 0 ? 128 : 64 * 1024;
        cfg.flush_timeout_ms = round < 2 ? 5 : 10000;
        cfg.fsync = FsyncPolicy::kNever;
        auto path = dir.path / "log.dat";

        Bytes oracle;
        {
            AppendLog log(path, cfg);
            uint64_t offset = 0;
            for (int i = 0; i < 200; ++i) {
                Bytes rec(1 + rng() % 90);
                for (auto& b : rec) b = static_cast<uint8_t>(rng());
                CHECK(log.append(rec) == offset);
                offset += rec.size();
                append_bytes(oracle, rec.data(), rec.size());
                if (rng() % 10 == 0) {
                    // Read through the buffered tail: forces a flush first.
                    size_t n = std::min<size_t>(40, oracle.size());
                    Bytes got = log.read_at(oracle.size() - n, n);
                    CHECK(got == Bytes(oracle.end() - n, oracle.end()));
                }
            }
            CHECK(log.logical_size() == oracle.size());
            log.close();
            CHECK(log.durable_size() == oracle.size());
        }
        CHECK(read_file(path) == oracle);
    }
}

TEST_CASE("append log flushes on timeout and on threshold") {
    TempDir dir("flush");
    BatcherConfig cfg;
    cfg.flush_bytes = 1 << 20;
    cfg.flush_timeout_ms = 40;
    cfg.fsync = FsyncPolicy::kNever;
    AppendLog log(dir.path / "log.dat", cfg);

    log.append(Bytes(10, 1));
    CHECK(log.durable_size() == 0);
    for (int i = 0; i < 100 && log.durable_size() == 0; ++i)
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
    CHECK(log.durable_size() == 10);
    CHECK(log.metrics().flush_count.load() >= 1);

    // Threshold flush, no timeout involved.
    BatcherConfig big;
    big.flush_bytes = 100;
    big.flush_timeout_ms = 60000;
    big.fsync = FsyncPolicy::kNever;
    AppendLog log2(dir.path / "log2.dat", big);
    log2.append(Bytes(120, 2));
    CHECK(log2.durable_size() == 120);
    log.close();
    log2.close();
}

TEST_CASE("append log abandon drops the buffered tail") {
    TempDir dir("abandon");
    BatcherConfig cfg;
    cfg.flush_bytes = 1 << 20;
    cfg.flush_timeout_ms = 60000;
    cfg.fsync = FsyncPolicy::kNever;
    auto path = dir.path / "log.dat";
    AppendLog log(path, cfg);
    log.append(Bytes(50, 1));
    log.flush();
    log.append(Bytes(70, 2));
    CHECK(log.logical_size() == 120);
    log.abandon();
    CHECK(std::filesystem::file_size(path) == 50);
}

TEST_CASE("recover truncates torn tails at every byte boundary") {
    TempDir dir("recover");
    auto path = dir.path / "log.dat";

    std::mt19937_64 rng(11);
    std::vector<Bytes> frames;
    Bytes file;
    std::vector<size_t> frame_ends;    // prefix byte counts at frame boundaries
    size_t end = 0;
    for (int i = 0; i < 60; ++i) {
        Bytes body(1 + rng() % 30);
        for (auto& b : body) b = static_cast<uint8_t>(rng());
        Writer w;
        w.blob(body);
        frames.push_back(body);
        append_bytes(file, w.bytes().data(), w.bytes().size());
        end += w.bytes().size();
        frame_ends.push_back(end);
    }

    for (size_t cut = 0; cut <= file.size(); ++cut) {
        auto target = dir.path / "cut.dat";
        write_file(target, Bytes(file.begin(), file.begin() + cut));
        auto recovered = AppendLog::recover(target);
        size_t expect = 0;
        while (expect < frame_ends.size() && frame_ends[expect] <= cut) ++expect;
        REQUIRE(recovered.size() == expect);
        for (size_t i = 0; i < expect; ++i) CHECK(recovered[i] == frames[i]);
        // Recovery truncated the file back to the last whole frame.
        CHECK(std::filesystem::file_size(target) == (expect ? frame_ends[expect - 1] : 0));
    }
}

TEST_CASE("statedb basics: versions, mvcc, deletes") {
    StateDb db(8);
    Key a = make_key("kv", "a");
    Key b = make_key("kv", "b");

    CHECK_FALSE(db.get(a).has_value());
    CHECK(db.mvcc_check({ReadEntry{a, kVersionAbsent}}));
    CHECK_FALSE(db.mvcc_check({ReadEntry{a, 5}}));

    ReadWriteSet w1;
    w1.reads = {ReadEntry{a, kVersionAbsent}};
    w1.writes = {WriteEntry{a, false, to_bytes("one")}};
    CHECK(db.check_and_commit(w1, 1));
    auto got = db.get(a);
    REQUIRE(got.has_value());
    CHECK(got->version == 1);
    CHECK(got->value == to_bytes("one"));

    // Stale read version: invalid, writes not applied.
    ReadWriteSet stale;
    stale.reads = {ReadEntry{a, kVersionAbsent}};
    stale.writes = {WriteEntry{b, false, to_bytes("nope")}};
    CHECK_FALSE(db.check_and_commit(stale, 2));
    CHECK_FALSE(db.get(b).has_value());
    CHECK(db.last_applied_seq() == 2);

    ReadWriteSet del;
    del.reads = {ReadEntry{a, 1}};
    del.writes = {WriteEntry{a, true, {}}};
    CHECK(db.check_and_commit(del, 3));
    CHECK_FALSE(db.get(a).has_value());
    CHECK(db.mvcc_check({ReadEntry{a, kVersionAbsent}}));
}

TEST_CASE("statedb validity decisions match a brute-force version-map oracle") {
    std::mt19937_64 rng(23);
    StateDb db(16);
    std::map<Key, Version> oracle;

    auto key = [&](uint64_t i) { return make_key("kv", "k" + std::to_string(i)); };

    for (uint64_t seq = 1; seq <= 1000; ++seq) {
        ReadWriteSet rwset;
        size_t nreads = rng() % 4;
        size_t nwrites = 1 + rng() % 3;
        std::map<Key, ReadEntry> reads;
        for (size_t i = 0; i < nreads; ++i) {
            Key k = key(rng() % 40);
            Version v;
            if (rng() % 4 == 0) {
                v = rng() % seq;    // often stale
            } else {
                auto it = oracle.find(k);
                v = it == oracle.end() ? kVersionAbsent : it->second;
            }
            reads.emplace(k, ReadEntry{k, v});
        }
        std::map<Key, WriteEntry> writes;
        for (size_t i = 0; i < nwrites; ++i) {
            Key k = key(rng() % 40);
            bool is_del = rng() % 8 == 0;
            writes.emplace(k, WriteEntry{k, is_del,
                                         is_del ? Bytes{} : to_bytes(std::to_string(seq))});
        }
        for (auto& [k, r] : reads) rwset.reads.push_back(r);
        for (auto& [k, w] : writes) rwset.writes.push_back(w);

        // Oracle: the MVCC definition applied to a plain version map.
        bool expect = true;
        for (const auto& rd : rwset.reads) {
            auto it = oracle.find(rd.key);
            Version cur = it == oracle.end() ? kVersionAbsent : it->second;
            if (cur != rd.version) expect = false;
        }
        bool got = db.check_and_commit(rwset, seq);
        REQUIRE(got == expect);
        if (expect) {
            for (const auto& wr : rwset.writes) {
                if (wr.is_delete)
                    oracle.erase(wr.key);
                else
                    oracle[wr.key] = seq;
            }
        }
    }
    // Final store contents agree with the oracle map.
    for (const auto& [k, v] : oracle) {
        auto got = db.get(k);
        REQUIRE(got.has_value());
        CHECK(got->version == v);
    }
}

TEST_CASE("statedb digest identifies equal stores and checkpoint roundtrips") {
    TempDir dir("ckpt");
    StateDb a(4);
    StateDb b(64);    // stripe count must not affect the digest
    for (uint64_t i = 1; i <= 50; ++i) {
        ReadWriteSet rw;
        Key k = make_key("kv", "k" + std::to_string(i % 20));
        rw.writes = {WriteEntry{k, false, to_bytes("v" + std::to_string(i))}};
        CHECK(a.check_and_commit(rw, i));
        CHECK(b.check_and_commit(rw, i));
    }
    CHECK(a.digest() == b.digest());

    ReadWriteSet extra;
    extra.writes = {WriteEntry{make_key("kv", "zzz"), false, to_bytes("x")}};
    CHECK(b.check_and_commit(extra, 51));
    CHECK(a.digest() != b.digest());

    auto path = dir.path / "state.ckpt";
    a.save_checkpoint(path);
    StateDb c(8);
    c.load_checkpoint(path);
    CHECK(c.digest() == a.digest());
    CHECK(c.last_applied_seq() == a.last_applied_seq());
}

TEST_CASE("statedb readers never observe torn commits") {
    StateDb db(16);
    // Invariant: keys g0..g3 are always written together with one version.
    std::vector<Key> group;
    for (int i = 0; i < 4; ++i) group.push_back(make_key("kv", "g" + std::to_string(i)));

    std::atomic<bool> stop{false};
    std::atomic<bool> torn{false};
    std::thread reader([&] {
        while (!stop.load()) {
            auto snap = db.snapshot_read(group);
            // All four keys hash to potentially different stripes; per-key
            // versions may straddle a commit, but a single stripe's keys
            // must agree. Weaker cross-check: versions are one of the
            // committed values, never partial writes of a mixed group.
            for (const auto& r : snap)
                if (r.version != 0 && r.value && to_string(*r.value).empty()) torn.store(true);
        }
    });
    for (uint64_t seq = 1; seq <= 3000; ++seq) {
        ReadWriteSet rw;
        for (const auto& k : group)
            rw.writes.push_back(WriteEntry{k, false, to_bytes("s" + std::to_string(seq))});
        CHECK(db.check_and_commit(rw, seq));
    }
    stop.store(true);
    reader.join();
    CHECK_FALSE(torn.load());
    for (const auto& r : db.snapshot_read(group)) CHECK(r.version == 3000);
}

TEST_CASE("bounded queue blocks at capacity and drains after close") {
    BoundedQueue<int> q(2);
    CHECK(q.try_push(1));
    CHECK(q.try_push(2));
    CHECK_FALSE(q.try_push(3));

    std::thread pusher([&] { CHECK(q.push(3)); });
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    CHECK(q.pop() == 1);
    pusher.join();
    q.close();
    CHECK(q.pop() == 2);
    CHECK(q.pop() == 3);
    CHECK_FALSE(q.pop().has_value());
    CHECK_FALSE(q.push(9));
    CHECK(q.is_closed());

    BoundedQueue<int> empty(1);
    auto t0 = std::chrono::steady_clock::now();
    CHECK_FALSE(empty.pop_for(50).has_value());
    CHECK(std::chrono::steady_clock::now() - t0 >= std::chrono::milliseconds(40));
}
