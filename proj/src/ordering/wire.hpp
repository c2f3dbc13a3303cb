#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "common/bytes.hpp"
#include "net/tcp.hpp"
#include "ordering/ordering.hpp"

// Wire protocol for ordering traffic (client-to-orderer and
// orderer-to-orderer): length-prefixed frames over stream sockets,
// [u32 length][u8 message type][body].

namespace brook {

enum class MsgType : uint8_t {
    kSubmit = 1,
    kSubmitAck = 2,
    kFetch = 3,
    kDeliver = 4,
    kAppend = 5,
    kAppendAck = 6,
    kVoteReq = 7,
    kVoteResp = 8,
};

enum class SubmitStatus : uint8_t { kOk = 0, kNotLeader = 1, kTimeout = 2 };
enum class DeliverStatus : uint8_t { kEntry = 0, kNotFound = 1 };

struct RaftLogEntry {
    uint64_t seq = 0;
    uint64_t term = 0;
    Hash32 payload_hash{};
    Bytes payload;
};

struct Msg {
    MsgType type = MsgType::kSubmit;

    // kSubmit / kDeliver
    Bytes payload;

    // kSubmitAck
    SubmitStatus submit_status = SubmitStatus::kOk;
    int32_t leader_hint = -1;

    // kDeliver
    DeliverStatus deliver_status = DeliverStatus::kEntry;
    Hash32 payload_hash{};

    // kFetch: seq to fetch (UINT64_MAX = latest); wait makes the orderer
    // hold the request until the entry commits (long poll).
    uint64_t seq = 0;
    uint8_t wait = 0;

    // Raft fields
    uint64_t term = 0;
    uint32_t node_id = 0;
    uint64_t prev_seq = 0;
    uint64_t prev_term = 0;
    uint64_t commit_seq = 0;
    uint64_t match_seq = 0;
    uint8_t success = 0;
    std::vector<RaftLogEntry> entries;
};

Bytes encode_msg(const Msg& msg);
Msg decode_msg(MsgType type, const Bytes& body);

bool send_msg(TcpConn& conn, const Msg& msg);
std::optional<Msg> recv_msg(TcpConn& conn);

}  // namespace brook
