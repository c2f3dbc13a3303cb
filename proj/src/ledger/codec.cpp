#include "ledger/codec.hpp"

namespace brook {

void write_key(Writer& w, const Key& k) {
    w.u16(static_cast<uint16_t>(k.ns.size()));
    w.raw(k.ns.data(), k.ns.size());
    w.u32(static_cast<uint32_t>(k.name.size()));
    w.raw(k.name);
}

Key read_key(Reader& r) {
    Key k;
    uint16_t ns_len = r.u16();
    k.ns.resize(ns_len);
    r.raw(k.ns.data(), ns_len);
    uint32_t name_len = r.u32();
    k.name.resize(name_len);
    r.raw(k.name.data(), name_len);
    return k;
}

static void write_rwset(Writer& w, const ReadWriteSet& rwset) {
    w.u32(static_cast<uint32_t>(rwset.reads.size()));
    for (const auto& rd : rwset.reads) {
        write_key(w, rd.key);
        w.u64(rd.version);
    }
    w.u32(static_cast<uint32_t>(rwset.writes.size()));
    for (const auto& wr : rwset.writes) {
        write_key(w, wr.key);
        w.u8(wr.is_delete ? 1 : 0);
        w.blob(wr.is_delete ? Bytes{} : wr.value);
    }
}

Bytes serialize_rwset(const ReadWriteSet& rwset) {
    Writer w;
    write_rwset(w, rwset);
    return w.take();
}

ReadWriteSet deserialize_rwset(Reader& r) {
    ReadWriteSet rwset;
    uint32_t n_reads = r.u32();
    rwset.reads.reserve(n_reads);
    for (uint32_t i = 0; i < n_reads; ++i) {
        ReadEntry rd;
        rd.key = read_key(r);
        rd.version = r.u64();
        rwset.reads.push_back(std::move(rd));
    }
    uint32_t n_writes = r.u32();
    rwset.writes.reserve(n_writes);
    for (uint32_t i = 0; i < n_writes; ++i) {
        WriteEntry wr;
        wr.key = read_key(r);
        wr.is_delete = r.u8() != 0;
        wr.value = r.blob();
        rwset.writes.push_back(std::move(wr));
    }
    return rwset;
}

Bytes serialize_tx(const Transaction& tx) {
    Writer w;
    w.raw(tx.tx_id.data(), tx.tx_id.size());
    w.str(tx.chaincode_id);
    w.u32(static_cast<uint32_t>(tx.args.size()));
    for (const auto& arg : tx.args) w.blob(arg);
    write_rwset(w, tx.rwset);
    w.u32(static_cast<uint32_t>(tx.endorsements.size()));
    for (const auto& e : tx.endorsements) {
        w.str(e.endorser_id);
        w.blob(e.signature);
    }
    w.blob(tx.client_sig);
    w.u64(static_cast<uint64_t>(tx.submit_ts));
    return w.take();
}

Transaction deserialize_tx(const Bytes& bytes) {
    Reader r(bytes);
    Transaction tx;
    r.raw(tx.tx_id.data(), tx.tx_id.size());
    tx.chaincode_id = r.str();
    uint32_t n_args = r.u32();
    tx.args.reserve(n_args);
    for (uint32_t i = 0; i < n_args; ++i) tx.args.push_back(r.blob());
    tx.rwset = deserialize_rwset(r);
    uint32_t n_end = r.u32();
    tx.endorsements.reserve(n_end);
    for (uint32_t i = 0; i < n_end; ++i) {
        Endorsement e;
        e.endorser_id = r.str();
        e.signature = r.blob();
        tx.endorsements.push_back(std::move(e));
    }
    tx.client_sig = r.blob();
    tx.submit_ts = static_cast<int64_t>(r.u64());
    if (!r.done()) throw CodecError("trailing bytes after transaction");
    return tx;
}

Bytes frame_record(const LedgerRecord& rec) {
    Writer w;
    w.u32(static_cast<uint32_t>(8 + 1 + 32 + rec.tx_bytes.size()));
    w.u64(rec.seq);
    w.u8(rec.valid ? 1 : 0);
    w.hash(rec.chain_hash);
    w.raw(rec.tx_bytes);
    return w.take();
}

LedgerRecord unframe_record(const Bytes& frame_body) {
    Reader r(frame_body);
    LedgerRecord rec;
    rec.seq = r.u64();
    rec.valid = r.u8() != 0;
    rec.chain_hash = r.hash();
    rec.tx_bytes.resize(r.remaining());
    r.raw(rec.tx_bytes.data(), rec.tx_bytes.size());
    return rec;
}

}  // namespace brook
