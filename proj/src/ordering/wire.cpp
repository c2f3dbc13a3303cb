#include "ordering/wire.hpp"

#include "common/codec.hpp"

namespace brook {

Bytes encode_msg(const Msg& msg) {
    Writer w;
    switch (msg.type) {
        case MsgType::kSubmit:
            w.blob(msg.payload);
            break;
        case MsgType::kSubmitAck:
            w.u8(static_cast<uint8_t>(msg.submit_status));
            w.u64(msg.seq);
            w.u32(static_cast<uint32_t>(msg.leader_hint));
            break;
        case MsgType::kFetch:
            w.u64(msg.seq);
            w.u8(msg.wait);
            break;
        case MsgType::kDeliver:
            w.u8(static_cast<uint8_t>(msg.deliver_status));
            w.u64(msg.seq);
            w.hash(msg.payload_hash);
            w.blob(msg.payload);
            break;
        case MsgType::kAppend:
            w.u64(msg.term);
            w.u32(msg.node_id);
            w.u64(msg.prev_seq);
            w.u64(msg.prev_term);
            w.u64(msg.commit_seq);
            w.u32(static_cast<uint32_t>(msg.entries.size()));
            for (const auto& e : msg.entries) {
                w.u64(e.seq);
                w.u64(e.term);
                w.hash(e.payload_hash);
                w.blob(e.payload);
            }
            break;
        case MsgType::kAppendAck:
            w.u64(msg.term);
            w.u32(msg.node_id);
            w.u8(msg.success);
            w.u64(msg.match_seq);
            break;
        case MsgType::kVoteReq:
            w.u64(msg.term);
            w.u32(msg.node_id);
            w.u64(msg.prev_seq);
            w.u64(msg.prev_term);
            break;
        case MsgType::kVoteResp:
            w.u64(msg.term);
            w.u32(msg.node_id);
            w.u8(msg.success);
            break;
    }
    return w.take();
}

Msg decode_msg(MsgType type, const Bytes& body) {
    Reader r(body);
    Msg msg;
    msg.type = type;
    switch (type) {
        case MsgType::kSubmit:
            msg.payload = r.blob();
            break;
        case MsgType::kSubmitAck:
            msg.submit_status = static_cast<SubmitStatus>(r.u8());
            msg.seq = r.u64();
            msg.leader_hint = static_cast<int32_t>(r.u32());
            break;
        case MsgType::kFetch:
            msg.seq = r.u64();
            msg.wait = r.u8();
            break;
        case MsgType::kDeliver:
            msg.deliver_status = static_cast<DeliverStatus>(r.u8());
            msg.seq = r.u64();
            msg.payload_hash = r.hash();
            msg.payload = r.blob();
            break;
        case MsgType::kAppend: {
            msg.term = r.u64();
            msg.node_id = r.u32();
            msg.prev_seq = r.u64();
            msg.prev_term = r.u64();
            msg.commit_seq = r.u64();
            uint32_t n = r.u32();
            msg.entries.reserve(n);
            for (uint32_t i = 0; i < n; ++i) {
                RaftLogEntry e;
                e.seq = r.u64();
                e.term = r.u64();
                e.payload_hash = r.hash();
                e.payload = r.blob();
                msg.entries.push_back(std::move(e));
            }
            break;
        }
        case MsgType::kAppendAck:
            msg.term = r.u64();
            msg.node_id = r.u32();
            msg.success = r.u8();
            msg.match_seq = r.u64();
            break;
        case MsgType::kVoteReq:
            msg.term = r.u64();
            msg.node_id = r.u32();
            msg.prev_seq = r.u64();
            msg.prev_term = r.u64();
            break;
        case MsgType::kVoteResp:
            msg.term = r.u64();
            msg.node_id = r.u32();
            msg.success = r.u8();
            break;
    }
    return msg;
}

bool send_msg(TcpConn& conn, const Msg& msg) {
    Bytes body = encode_msg(msg);
    Writer w;
    w.u32(static_cast<uint32_t>(body.size() + 1));
    w.u8(static_cast<uint8_t>(msg.type));
    w.raw(body);
    const Bytes& frame = w.bytes();
    return conn.send_all(frame.data(), frame.size());
}

std::optional<Msg> recv_msg(TcpConn& conn) {
    uint8_t head[5];
    if (!conn.recv_all(head, sizeof(head))) return std::nullopt;
    uint32_t len = static_cast<uint32_t>(head[0]) | (head[1] << 8) | (head[2] << 16) |
                   (static_cast<uint32_t>(head[3]) << 24);
    if (len == 0) return std::nullopt;
    auto type = static_cast<MsgType>(head[4]);
    Bytes body(len - 1);
    if (!body.empty() && !conn.recv_all(body.data(), body.size())) return std::nullopt;
    try {
        return decode_msg(type, body);
    } catch (const CodecError&) {
        return std::nullopt;
    }
}

}  // namespace brook
