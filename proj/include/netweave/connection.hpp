// Copyright 2026 The Netweave Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "netweave/bitstring.hpp"
#include "netweave/errors.hpp"

namespace netweave {

// A reply the engine owes the target. `bindings` are per-message state-key
// overrides layered on top of the connection's own bindings at assembly time
// — e.g. an ARP reply pins our-mac/our-ip to the requester's address so the
// frame goes back where the question came from.
struct PendingReply {
  std::string proto;
  std::map<std::string, BitString> bindings;
};

struct TcpConnState {
  enum class Phase { kClosed, kSynSentByUs, kSynSentByPeer, kEstablished };
  Phase phase = Phase::kClosed;
  uint32_t snd_nxt = 1;  // our ISN is always 1
  uint32_t rcv_nxt = 0;
};

struct DhcpServState {
  enum class Phase { kIdle, kOfferSent, kAckSent };
  Phase phase = Phase::kIdle;
};

// Reassembly bookkeeping would live here; every frame we emit fits one MTU
// and carries DF, so there is nothing to track yet.
struct FragmentationState {};

// Per-execution session state. Reset wholesale at the start of every target
// execution — nothing here survives a target reset.
struct ConnectionState {
  TcpConnState tcp;
  DhcpServState dhcp;
  FragmentationState frag;

  // Live per-session bindings (state key -> value). Consulted before the
  // configuration's extracted values during assembly, so a sequence number
  // learned ten microseconds ago beats one averaged over a campaign.
  std::map<std::string, BitString> overrides;

  std::deque<PendingReply> pending;

  // Out-of-order peer messages don't throw past the engine; the machine
  // resets and counts them.
  size_t state_errors = 0;

  bool syn_opened = false;  // at most one active open per execution
};

// What sequence_step needs to see of one decoded layer.
struct LayerView {
  std::string proto;
  const std::map<std::string, BitString>* values;
  size_t body_size = 0;
};

namespace detail {

inline uint64_t field_uint(const LayerView& l, const char* name) {
  auto it = l.values->find(name);
  if (it == l.values->end() || it->second.width() > 64) return 0;
  return it->second.to_uint();
}

inline BitString field_bits(const LayerView& l, const char* name) {
  auto it = l.values->find(name);
  return it == l.values->end() ? BitString() : it->second;
}

inline void reset_state(ConnectionState& conn) {
  conn.tcp = TcpConnState{};
  conn.dhcp = DhcpServState{};
  ++conn.state_errors;
}

}  // namespace detail

// Advance the connection machines with one frame received from the target
// (layers bottom-to-top, fully decoded). Queues any reply we now owe and
// refreshes session bindings. Out-of-order messages reset the affected
// machine instead of escaping as StateError.
inline void sequence_step(const std::vector<LayerView>& layers,
                          ConnectionState& conn) {
  if (layers.empty()) return;

  // Session-local peer identity: the frame's source addresses tell us where
  // replies go, even before any campaign-wide analysis has run.
  for (const auto& l : layers) {
    if (l.proto == "ethernet") {
      BitString src = detail::field_bits(l, "src-mac");
      if (src.width() == 48 && !src.is_zero()) conn.overrides["our-mac"] = src;
    }
    if (l.proto == "ipv4") {
      BitString src = detail::field_bits(l, "src-ip");
      if (src.width() == 32 && !src.is_zero()) conn.overrides["our-ip"] = src;
    }
  }

  const LayerView& top = layers.back();

  if (top.proto == "arp") {
    uint64_t oper = detail::field_uint(top, "oper");
    BitString sender_mac = detail::field_bits(top, "sender-mac");
    BitString sender_ip = detail::field_bits(top, "sender-ip");
    BitString target_ip = detail::field_bits(top, "target-ip");
    if (oper == 1 && !(sender_ip == target_ip)) {
      // A real question (gratuitous announcements answer themselves).
      PendingReply r{"arp", {}};
      r.bindings["arp-oper"] = BitString::from_uint(2, 16);
      if (sender_mac.width() == 48) r.bindings["our-mac"] = sender_mac;
      if (sender_ip.width() == 32) r.bindings["our-ip"] = sender_ip;
      conn.pending.push_back(std::move(r));
    }
    return;
  }

  if (top.proto == "dhcp") {
    uint64_t msg = detail::field_uint(top, "message-type");
    BitString xid = detail::field_bits(top, "xid");
    if (msg == 1) {  // DISCOVER
      if (xid.width() == 32) conn.overrides["dhcp-transaction-id"] = xid;
      PendingReply offer{"dhcp", {}};
      offer.bindings["dhcp-msg-type"] = BitString::from_uint(2, 8);
      offer.bindings["dhcp-op"] = BitString::from_uint(2, 8);
      conn.pending.push_back(std::move(offer));
      conn.dhcp.phase = DhcpServState::Phase::kOfferSent;
    } else if (msg == 3) {  // REQUEST
      if (conn.dhcp.phase == DhcpServState::Phase::kIdle) {
        detail::reset_state(conn);
        return;
      }
      if (xid.width() == 32) conn.overrides["dhcp-transaction-id"] = xid;
      PendingReply ack{"dhcp", {}};
      ack.bindings["dhcp-msg-type"] = BitString::from_uint(5, 8);
      ack.bindings["dhcp-op"] = BitString::from_uint(2, 8);
      conn.pending.push_back(std::move(ack));
      conn.dhcp.phase = DhcpServState::Phase::kAckSent;
    }
    return;
  }

  if (top.proto == "tcp") {
    uint64_t flags = detail::field_uint(top, "flags");
    uint32_t seq = uint32_t(detail::field_uint(top, "seq"));
    BitString src_port = detail::field_bits(top, "src-port");
    BitString dst_port = detail::field_bits(top, "dst-port");
    bool syn = flags & 0x02, ack = flags & 0x10, rst = flags & 0x04;
    using Phase = TcpConnState::Phase;

    if (rst) {
      conn.tcp = TcpConnState{};
      return;
    }
    if (syn && !ack) {
      // Passive open: peer connects to us.
      conn.tcp = TcpConnState{};
      conn.tcp.phase = Phase::kSynSentByPeer;
      conn.tcp.rcv_nxt = seq + 1;
      conn.tcp.snd_nxt = 2;  // ISN 1, SYN consumes one
      conn.overrides["tcp-local-port"] = dst_port;
      conn.overrides["tcp-peer-port"] = src_port;
      PendingReply synack{"tcp", {}};
      synack.bindings["tcp-flags"] = BitString::from_uint(0x12, 8);
      synack.bindings["tcp-seq"] = BitString::from_uint(1, 32);
      synack.bindings["tcp-ack"] = BitString::from_uint(conn.tcp.rcv_nxt, 32);
      conn.pending.push_back(std::move(synack));
      return;
    }
    if (syn && ack) {
      if (conn.tcp.phase != Phase::kSynSentByUs) {
        detail::reset_state(conn);
        return;
      }
      conn.tcp.rcv_nxt = seq + 1;
      conn.tcp.phase = Phase::kEstablished;
      conn.overrides["tcp-local-port"] = dst_port;
      conn.overrides["tcp-peer-port"] = src_port;
      conn.overrides["tcp-seq"] = BitString::from_uint(conn.tcp.snd_nxt, 32);
      conn.overrides["tcp-ack"] = BitString::from_uint(conn.tcp.rcv_nxt, 32);
      conn.overrides["tcp-flags"] = BitString::from_uint(0x10, 8);
      PendingReply third_ack{"tcp", {}};
      third_ack.bindings["tcp-flags"] = BitString::from_uint(0x10, 8);
      third_ack.bindings["tcp-seq"] = BitString::from_uint(conn.tcp.snd_nxt, 32);
      third_ack.bindings["tcp-ack"] = BitString::from_uint(conn.tcp.rcv_nxt, 32);
      conn.pending.push_back(std::move(third_ack));
      return;
    }
    if (ack && conn.tcp.phase == Phase::kSynSentByPeer) {
      conn.tcp.phase = Phase::kEstablished;
      conn.overrides["tcp-seq"] = BitString::from_uint(conn.tcp.snd_nxt, 32);
      conn.overrides["tcp-ack"] = BitString::from_uint(conn.tcp.rcv_nxt, 32);
      conn.overrides["tcp-flags"] = BitString::from_uint(0x10, 8);
      if (top.body_size > 0) {
        conn.tcp.rcv_nxt += uint32_t(top.body_size);
        conn.overrides["tcp-ack"] = BitString::from_uint(conn.tcp.rcv_nxt, 32);
      }
      return;
    }
    if (conn.tcp.phase == Phase::kEstablished && top.body_size > 0) {
      if (seq != conn.tcp.rcv_nxt) {
        detail::reset_state(conn);
        return;
      }
      conn.tcp.rcv_nxt += uint32_t(top.body_size);
      conn.overrides["tcp-ack"] = BitString::from_uint(conn.tcp.rcv_nxt, 32);
      PendingReply data_ack{"tcp", {}};
      data_ack.bindings["tcp-flags"] = BitString::from_uint(0x10, 8);
      data_ack.bindings["tcp-seq"] = BitString::from_uint(conn.tcp.snd_nxt, 32);
      data_ack.bindings["tcp-ack"] = BitString::from_uint(conn.tcp.rcv_nxt, 32);
      conn.pending.push_back(std::move(data_ack));
      return;
    }
    // Bare ACKs in other phases carry no obligation.
    return;
  }
}

// Next frame a handshake plan for `proto` should emit: the oldest reply owed
// for that protocol, or — for TCP with no connection yet — an active open.
// Returns nothing when the plan has no work, which is the plan's exit.
inline std::optional<PendingReply> next_handshake_action(
    const std::string& proto, ConnectionState& conn) {
  for (auto it = conn.pending.begin(); it != conn.pending.end(); ++it) {
    if (it->proto == proto) {
      PendingReply r = std::move(*it);
      conn.pending.erase(it);
      return r;
    }
  }
  if (proto == "tcp" && conn.tcp.phase == TcpConnState::Phase::kClosed &&
      !conn.syn_opened) {
    conn.syn_opened = true;
    conn.tcp.phase = TcpConnState::Phase::kSynSentByUs;
    conn.tcp.snd_nxt = 2;  // ISN 1, SYN consumes one
    PendingReply syn{"tcp", {}};
    syn.bindings["tcp-flags"] = BitString::from_uint(0x02, 8);
    syn.bindings["tcp-seq"] = BitString::from_uint(1, 32);
    syn.bindings["tcp-ack"] = BitString::from_uint(0, 32);
    return syn;
  }
  return std::nullopt;
}

}  // namespace netweave
