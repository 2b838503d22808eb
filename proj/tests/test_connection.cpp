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

#include "netweave/connection.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <deque>

using namespace netweave;

namespace {

// Build a LayerView stack from (proto, fields) pairs. The views hold
// pointers into `maps`, so the holder is a deque: growth never moves
// existing elements.
struct Frame {
  std::deque<std::map<std::string, BitString>> maps;
  std::vector<LayerView> views;

  Frame& layer(const std::string& proto,
               std::map<std::string, BitString> values, size_t body = 0) {
    maps.push_back(std::move(values));
    views.push_back({proto, &maps.back(), body});
    return *this;
  }
};

BitString u(uint64_t v, size_t w) { return BitString::from_uint(v, w); }

}  // namespace

TEST_CASE("source addresses become session bindings") {
  ConnectionState conn;
  Frame f;
  f.layer("ethernet", {{"src-mac", u(0x061122334455ULL, 48)}})
      .layer("ipv4", {{"src-ip", u(0x0a000005, 32)}});
  sequence_step(f.views, conn);
  REQUIRE(conn.overrides.at("our-mac").to_uint() == 0x061122334455ULL);
  REQUIRE(conn.overrides.at("our-ip").to_uint() == 0x0a000005);
}

TEST_CASE("zero source addresses are not identities") {
  ConnectionState conn;
  Frame f;
  f.layer("ethernet", {{"src-mac", u(0, 48)}})
      .layer("ipv4", {{"src-ip", u(0, 32)}});
  sequence_step(f.views, conn);
  REQUIRE(conn.overrides.count("our-mac") == 0);
  REQUIRE(conn.overrides.count("our-ip") == 0);
}

TEST_CASE("an arp question queues a reply aimed back at the asker") {
  ConnectionState conn;
  Frame f;
  f.layer("ethernet", {{"src-mac", u(0x061122334455ULL, 48)}})
      .layer("arp", {{"oper", u(1, 16)},
                     {"sender-mac", u(0x061122334455ULL, 48)},
                     {"sender-ip", u(0x0a000005, 32)},
                     {"target-ip", u(0x0a000001, 32)}});
  sequence_step(f.views, conn);
  REQUIRE(conn.pending.size() == 1);
  const PendingReply& r = conn.pending.front();
  REQUIRE(r.proto == "arp");
  REQUIRE(r.bindings.at("arp-oper").to_uint() == 2);
  REQUIRE(r.bindings.at("our-mac").to_uint() == 0x061122334455ULL);
  REQUIRE(r.bindings.at("our-ip").to_uint() == 0x0a000005);
}

TEST_CASE("gratuitous arp answers itself — no reply owed") {
  ConnectionState conn;
  Frame f;
  f.layer("arp", {{"oper", u(1, 16)},
                  {"sender-ip", u(0x0a000005, 32)},
                  {"target-ip", u(0x0a000005, 32)}});
  sequence_step(f.views, conn);
  REQUIRE(conn.pending.empty());
}

TEST_CASE("dhcp discover then request walks the server machine") {
  ConnectionState conn;
  Frame discover;
  discover.layer("dhcp",
                 {{"message-type", u(1, 8)}, {"xid", u(0xDEADBEEF, 32)}});
  sequence_step(discover.views, conn);
  REQUIRE(conn.dhcp.phase == DhcpServState::Phase::kOfferSent);
  REQUIRE(conn.overrides.at("dhcp-transaction-id").to_uint() == 0xDEADBEEF);
  REQUIRE(conn.pending.size() == 1);
  REQUIRE(conn.pending.front().bindings.at("dhcp-msg-type").to_uint() == 2);

  Frame request;
  request.layer("dhcp",
                {{"message-type", u(3, 8)}, {"xid", u(0xDEADBEEF, 32)}});
  sequence_step(request.views, conn);
  REQUIRE(conn.dhcp.phase == DhcpServState::Phase::kAckSent);
  REQUIRE(conn.pending.size() == 2);
  REQUIRE(conn.pending.back().bindings.at("dhcp-msg-type").to_uint() == 5);
  REQUIRE(conn.state_errors == 0);
}

TEST_CASE("a request with no preceding discover resets, not replies") {
  ConnectionState conn;
  Frame request;
  request.layer("dhcp", {{"message-type", u(3, 8)}, {"xid", u(1, 32)}});
  sequence_step(request.views, conn);
  REQUIRE(conn.pending.empty());
  REQUIRE(conn.state_errors == 1);
  REQUIRE(conn.dhcp.phase == DhcpServState::Phase::kIdle);
}

TEST_CASE("passive tcp open: peer syn earns a syn-ack and port bindings") {
  ConnectionState conn;
  Frame syn;
  syn.layer("tcp", {{"flags", u(0x02, 8)},
                    {"seq", u(0x1000, 32)},
                    {"src-port", u(49152, 16)},
                    {"dst-port", u(7, 16)}});
  sequence_step(syn.views, conn);
  REQUIRE(conn.tcp.phase == TcpConnState::Phase::kSynSentByPeer);
  REQUIRE(conn.tcp.rcv_nxt == 0x1001);
  REQUIRE(conn.tcp.snd_nxt == 2);
  REQUIRE(conn.overrides.at("tcp-local-port").to_uint() == 7);
  REQUIRE(conn.overrides.at("tcp-peer-port").to_uint() == 49152);
  const PendingReply& r = conn.pending.front();
  REQUIRE(r.bindings.at("tcp-flags").to_uint() == 0x12);
  REQUIRE(r.bindings.at("tcp-seq").to_uint() == 1);
  REQUIRE(r.bindings.at("tcp-ack").to_uint() == 0x1001);

  // The peer's final ACK completes the handshake.
  Frame ack;
  ack.layer("tcp", {{"flags", u(0x10, 8)}, {"seq", u(0x1001, 32)}});
  sequence_step(ack.views, conn);
  REQUIRE(conn.tcp.phase == TcpConnState::Phase::kEstablished);
  REQUIRE(conn.overrides.at("tcp-flags").to_uint() == 0x10);
}

TEST_CASE("active tcp open: syn-ack from the peer establishes and acks") {
  ConnectionState conn;
  auto opener = next_handshake_action("tcp", conn);
  REQUIRE(opener.has_value());
  REQUIRE(opener->bindings.at("tcp-flags").to_uint() == 0x02);
  REQUIRE(opener->bindings.at("tcp-seq").to_uint() == 1);
  REQUIRE(conn.tcp.phase == TcpConnState::Phase::kSynSentByUs);

  // Only one active open per execution.
  REQUIRE_FALSE(next_handshake_action("tcp", conn).has_value());

  Frame synack;
  synack.layer("tcp", {{"flags", u(0x12, 8)},
                       {"seq", u(0x11223344, 32)},
                       {"src-port", u(7, 16)},
                       {"dst-port", u(49152, 16)}});
  sequence_step(synack.views, conn);
  REQUIRE(conn.tcp.phase == TcpConnState::Phase::kEstablished);
  REQUIRE(conn.overrides.at("tcp-seq").to_uint() == 2);
  REQUIRE(conn.overrides.at("tcp-ack").to_uint() == 0x11223345);
  REQUIRE(conn.pending.size() == 1);
  REQUIRE(conn.pending.front().bindings.at("tcp-flags").to_uint() == 0x10);
}

TEST_CASE("an unsolicited syn-ack resets the machine") {
  ConnectionState conn;
  Frame synack;
  synack.layer("tcp", {{"flags", u(0x12, 8)}, {"seq", u(5, 32)}});
  sequence_step(synack.views, conn);
  REQUIRE(conn.state_errors == 1);
  REQUIRE(conn.tcp.phase == TcpConnState::Phase::kClosed);
}

TEST_CASE("established data advances rcv_nxt and owes an ack") {
  ConnectionState conn;
  next_handshake_action("tcp", conn);
  Frame synack;
  synack.layer("tcp", {{"flags", u(0x12, 8)}, {"seq", u(100, 32)}});
  sequence_step(synack.views, conn);
  conn.pending.clear();

  Frame data;
  data.layer("tcp", {{"flags", u(0x18, 8)}, {"seq", u(101, 32)}}, 5);
  sequence_step(data.views, conn);
  REQUIRE(conn.tcp.rcv_nxt == 106);
  REQUIRE(conn.overrides.at("tcp-ack").to_uint() == 106);
  REQUIRE(conn.pending.size() == 1);

  // Out-of-window data resets rather than acking garbage.
  Frame bad;
  bad.layer("tcp", {{"flags", u(0x18, 8)}, {"seq", u(999, 32)}}, 3);
  sequence_step(bad.views, conn);
  REQUIRE(conn.state_errors == 1);
  REQUIRE(conn.tcp.phase == TcpConnState::Phase::kClosed);
}

TEST_CASE("rst silently clears the connection") {
  ConnectionState conn;
  next_handshake_action("tcp", conn);
  Frame rst;
  rst.layer("tcp", {{"flags", u(0x04, 8)}, {"seq", u(0, 32)}});
  sequence_step(rst.views, conn);
  REQUIRE(conn.tcp.phase == TcpConnState::Phase::kClosed);
  REQUIRE(conn.state_errors == 0);
}

TEST_CASE("handshake actions pop oldest-first per protocol") {
  ConnectionState conn;
  conn.pending.push_back({"arp", {{"tag", BitString::from_uint(1, 8)}}});
  conn.pending.push_back({"dhcp", {}});
  conn.pending.push_back({"arp", {{"tag", BitString::from_uint(2, 8)}}});

  auto first = next_handshake_action("arp", conn);
  REQUIRE(first->bindings.at("tag").to_uint() == 1);
  auto second = next_handshake_action("arp", conn);
  REQUIRE(second->bindings.at("tag").to_uint() == 2);
  REQUIRE_FALSE(next_handshake_action("arp", conn).has_value());
  REQUIRE(conn.pending.size() == 1);  // the dhcp entry is untouched
}
