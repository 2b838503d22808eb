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

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "netweave/bitstring.hpp"
#include "netweave/checksum.hpp"
#include "netweave/errors.hpp"

namespace netweave {

// Coverage block identifiers exposed by the mock stack. Bands are disjoint
// per layer so a trace can be bucketed without a symbol table; the 900-band
// is one shared pool that every rejection path emits in full, regardless of
// which layer rejected — deliberately useless for telling errors apart.
namespace blk {

constexpr uint32_t kBootEntry = 10;
constexpr uint32_t kArpPeriodicTx = 20;  // activity timer, static-IP profiles
constexpr uint32_t kDhcpRetxTx = 21;     // activity timer, DHCP client

constexpr uint32_t kEthDstUnicast = 101;
constexpr uint32_t kEthDstBroadcast = 102;
constexpr uint32_t kEthTypeIpv4 = 103;
constexpr uint32_t kEthTypeArp = 104;
constexpr uint32_t kEthTypeUnknown = 105;

constexpr uint32_t kMbCrcOk = 150;
constexpr uint32_t kMbFrameOk = 151;
constexpr uint32_t kMbUnitOk = 152;
constexpr uint32_t kMbBroadcast = 153;
constexpr uint32_t kMbUnitMiss = 154;
constexpr uint32_t kMbLenOk = 155;
constexpr uint32_t kMbLenBad = 156;
constexpr uint32_t kMbFnRead = 157;
constexpr uint32_t kMbReadOk = 158;
constexpr uint32_t kMbReadBad = 159;
constexpr uint32_t kMbCountRange = 160;
constexpr uint32_t kMbFnWrite = 161;
constexpr uint32_t kMbWriteOk = 162;
constexpr uint32_t kMbWriteBad = 163;
constexpr uint32_t kMbFnUnsupported = 164;

constexpr uint32_t kArpHdrOk = 200;
constexpr uint32_t kArpRunt = 201;
constexpr uint32_t kArpReqRx = 202;
constexpr uint32_t kArpGratuitous = 203;
constexpr uint32_t kArpReplyTx = 204;
constexpr uint32_t kArpNotMine = 205;
constexpr uint32_t kArpReplyRx = 206;
constexpr uint32_t kArpCacheStore = 207;
constexpr uint32_t kArpOperUnknown = 208;
constexpr uint32_t kArpHdrBad = 209;
constexpr uint32_t kArpAnnounceTx = 211;

constexpr uint32_t kIpRunt = 301;
constexpr uint32_t kIpVersionOk = 302;
constexpr uint32_t kIpBadVersion = 303;
constexpr uint32_t kIpOptionsUnsupported = 304;
constexpr uint32_t kIpBadLength = 305;
constexpr uint32_t kIpCsumOk = 306;
constexpr uint32_t kIpCsumBad = 307;
constexpr uint32_t kIpFragUnsupported = 308;
constexpr uint32_t kIpDstBcast = 309;
constexpr uint32_t kIpDstUnicast = 310;
constexpr uint32_t kIpDstMiss = 311;
constexpr uint32_t kIpProtoUnhandled = 313;  // one id for every such proto
constexpr uint32_t kIpProtoUdp = 314;
constexpr uint32_t kIpProtoTcp = 315;

constexpr uint32_t kUdpRunt = 401;
constexpr uint32_t kUdpLenOk = 402;
constexpr uint32_t kUdpLenBad = 403;
constexpr uint32_t kUdpCsumAbsent = 404;
constexpr uint32_t kUdpCsumOk = 405;
constexpr uint32_t kUdpCsumBad = 406;
constexpr uint32_t kUdpAccept = 407;
constexpr uint32_t kUdpEchoTx = 408;

constexpr uint32_t kDhcpPort = 450;
constexpr uint32_t kDhcpRunt = 451;
constexpr uint32_t kDhcpOpOk = 452;
constexpr uint32_t kDhcpOpBad = 453;
constexpr uint32_t kDhcpCookieOk = 454;
constexpr uint32_t kDhcpCookieBad = 455;
constexpr uint32_t kDhcpXidMatch = 456;
constexpr uint32_t kDhcpXidMiss = 457;
constexpr uint32_t kDhcpOfferRx = 458;
constexpr uint32_t kDhcpRequestTx = 459;
constexpr uint32_t kDhcpUnexpected = 460;
constexpr uint32_t kDhcpAckRx = 461;
constexpr uint32_t kDhcpLeased = 462;
constexpr uint32_t kDhcpTypeOther = 463;
constexpr uint32_t kDhcpDiscoverTx = 464;

constexpr uint32_t kTcpRunt = 501;
constexpr uint32_t kTcpSegOk = 502;
constexpr uint32_t kTcpOptionsUnsupported = 503;
constexpr uint32_t kTcpCsumOk = 504;
constexpr uint32_t kTcpCsumBad = 505;
constexpr uint32_t kTcpSynRx = 506;
constexpr uint32_t kTcpSynAckTx = 507;
constexpr uint32_t kTcpEstablished = 508;
constexpr uint32_t kTcpBadAck = 509;
constexpr uint32_t kTcpDataRx = 510;
constexpr uint32_t kTcpDataTx = 511;
constexpr uint32_t kTcpSeqMiss = 512;
constexpr uint32_t kTcpRstRx = 513;
constexpr uint32_t kTcpSynDup = 514;
constexpr uint32_t kTcpNoConn = 515;

constexpr uint32_t kAppUdpEcho = 700;
constexpr uint32_t kAppTcpEcho = 710;
constexpr uint32_t kAppHttpEntry = 720;
constexpr uint32_t kAppHttpGet = 721;
constexpr uint32_t kAppHttpPost = 722;
constexpr uint32_t kAppHttpBadMethod = 723;
constexpr uint32_t kAppMbRead = 730;
constexpr uint32_t kAppMbWrite = 731;

constexpr uint32_t kPoolFirst = 900;
constexpr uint32_t kPoolLast = 911;

}  // namespace blk

// Band name for a block id, for per-layer reporting.
inline std::string block_band(uint32_t id) {
  if (id >= blk::kPoolFirst && id <= blk::kPoolLast) return "pool";
  if (id < 100) return "timer";
  if (id < 150) return "ethernet";
  if (id < 200) return "modbus";
  if (id < 300) return "arp";
  if (id < 400) return "ipv4";
  if (id < 450) return "udp";
  if (id < 500) return "dhcp";
  if (id < 560) return "tcp";
  if (id < 700) return "icmp";
  if (id < 750) return "app";
  return "other";
}

inline bool is_app_block(uint32_t id) { return id >= 700 && id < 750; }

struct EnsProfile {
  std::string name;
  std::array<uint8_t, 6> mac{};
  uint32_t static_ip = 0;  // 0 means the device leases one over DHCP
  uint8_t unit_id = 1;     // modbus station address
  bool verify_ip_checksum = true;
  bool verify_udp_checksum = true;
  bool verify_dest_address = true;

  bool modbus_dialect() const { return name == "modbus-device"; }

  static EnsProfile by_name(const std::string& n) {
    EnsProfile p;
    p.name = n;
    if (n == "udp-echo") {
      p.mac = {0x06, 0x11, 0x22, 0x33, 0x44, 0x55};
    } else if (n == "tcp-echo-server") {
      p.mac = {0x06, 0xaa, 0xbb, 0xcc, 0xdd, 0x01};
      p.static_ip = 0x0a000007;  // 10.0.0.7
    } else if (n == "http-lite") {
      p.mac = {0x06, 0xaa, 0xbb, 0xcc, 0xdd, 0x02};
      p.static_ip = 0x0a000009;  // 10.0.0.9
    } else if (n == "modbus-device") {
      p.unit_id = 1;
    } else {
      throw ConfigError("unknown target profile " + n);
    }
    return p;
  }

  static const std::vector<std::string>& names() {
    static const std::vector<std::string> n = {"udp-echo", "tcp-echo-server",
                                               "http-lite", "modbus-device"};
    return n;
  }
};

// Deterministic, coverage-instrumented network stack standing in for a real
// embedded target. Parsers here are written against the wire formats
// directly — independently of the grammar documents — so agreement between
// the two is evidence, not tautology. Every inbound frame leaves at least
// one block id in the trace; every rejection dumps the whole shared error
// pool on top of (at most) one named block.
class MockEns {
 public:
  MockEns(EnsProfile profile, uint64_t seed)
      : prof_(std::move(profile)), seed_(seed) {
    reset();
  }

  // Power-cycle: all protocol state is lost; boot traffic is queued.
  void reset() {
    ++reset_count_;
    step_count_ = 0;
    arp_cache_.clear();
    dhcp_ = DhcpPhase::kNone;
    leased_ip_ = 0;
    offered_ip_ = 0;
    tcp_ = TcpConn{};
    outbox_.clear();
    trace_.clear();
    trace(blk::kBootEntry);
    if (prof_.modbus_dialect()) return;  // a silent serial device
    if (prof_.static_ip == 0) {
      xid_ = boot_xid();
      dhcp_ = DhcpPhase::kDiscoverSent;
      emit_discover();
    } else {
      emit_gratuitous_arp(prof_.static_ip);
    }
  }

  // Unsolicited frames queued since the last call (boot, timers, announce).
  std::vector<Bytes> take_boot() { return std::move(outbox_); }

  // Feed one frame; responses come back immediately. The activity clock
  // ticks on every inbound frame, accepted or not.
  std::vector<Bytes> step(const Bytes& frame) {
    outbox_.clear();
    ++step_count_;
    if (prof_.modbus_dialect()) {
      on_modbus(frame);
    } else {
      on_ethernet(frame);
    }
    // Periodic work rides on inbound activity: a DHCP client keeps
    // re-soliciting until leased, a static-IP host keeps announcing itself.
    if (step_count_ % kTimerPeriod == 0) {
      if (prof_.static_ip == 0 && !prof_.modbus_dialect()) {
        if (dhcp_ == DhcpPhase::kDiscoverSent) {
          trace(blk::kDhcpRetxTx);
          emit_discover();
        }
      } else if (!prof_.modbus_dialect()) {
        trace(blk::kArpPeriodicTx);
        emit_gratuitous_arp(prof_.static_ip);
      }
    }
    return std::move(outbox_);
  }

  // Ordered block ids accumulated since the last drain.
  std::vector<uint32_t> take_trace() { return std::move(trace_); }

  // Test oracles.
  uint32_t xid() const { return xid_; }
  bool leased() const { return dhcp_ == DhcpPhase::kLeased; }
  uint32_t ip() const {
    return prof_.static_ip ? prof_.static_ip : leased_ip_;
  }
  const EnsProfile& profile() const { return prof_; }
  uint64_t steps() const { return step_count_; }

  static constexpr uint64_t kTimerPeriod = 6;
  static constexpr uint32_t kTcpIsn = 0x11223344;

 private:
  enum class DhcpPhase { kNone, kDiscoverSent, kRequestSent, kLeased };

  struct TcpConn {
    bool open = false;
    bool established = false;
    std::array<uint8_t, 6> peer_mac{};
    uint32_t peer_ip = 0;
    uint16_t peer_port = 0;
    uint16_t local_port = 0;
    uint32_t rcv_nxt = 0;
    uint32_t snd_nxt = 0;
  };

  struct RxMeta {
    std::array<uint8_t, 6> src_mac{};
    uint32_t src_ip = 0;
    uint32_t dst_ip = 0;
  };

  void trace(uint32_t id) { trace_.push_back(id); }

  void pool() {
    for (uint32_t id = blk::kPoolFirst; id <= blk::kPoolLast; ++id) trace(id);
  }

  uint32_t boot_xid() const {
    uint64_t x = seed_ ^ (reset_count_ * 0x9E3779B97F4A7C15ull);
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ull;
    x ^= x >> 27;
    uint32_t v = uint32_t(x >> 16);
    return v ? v : 1;
  }

  // --- wire helpers -------------------------------------------------------

  static uint16_t rd16(const Bytes& b, size_t off) {
    return uint16_t(b[off]) << 8 | b[off + 1];
  }
  static uint32_t rd32(const Bytes& b, size_t off) {
    return uint32_t(rd16(b, off)) << 16 | rd16(b, off + 2);
  }
  static void wr16(Bytes& b, size_t off, uint16_t v) {
    b[off] = uint8_t(v >> 8);
    b[off + 1] = uint8_t(v);
  }
  static void wr32(Bytes& b, size_t off, uint32_t v) {
    wr16(b, off, uint16_t(v >> 16));
    wr16(b, off + 2, uint16_t(v));
  }

  static Bytes eth_frame(const uint8_t* dst, const uint8_t* src, uint16_t type,
                         const Bytes& payload) {
    Bytes f;
    f.reserve(14 + payload.size());
    f.insert(f.end(), dst, dst + 6);
    f.insert(f.end(), src, src + 6);
    f.push_back(uint8_t(type >> 8));
    f.push_back(uint8_t(type));
    f.insert(f.end(), payload.begin(), payload.end());
    return f;
  }

  Bytes ipv4_packet(uint32_t src, uint32_t dst, uint8_t proto,
                    const Bytes& payload) const {
    Bytes p(20 + payload.size());
    p[0] = 0x45;
    wr16(p, 2, uint16_t(p.size()));
    wr16(p, 4, 0x0000);        // identification
    wr16(p, 6, 0x4000);        // DF
    p[8] = 64;                 // ttl
    p[9] = proto;
    wr32(p, 12, src);
    wr32(p, 16, dst);
    uint16_t c = internet_checksum(p.data(), 20);
    wr16(p, 10, c);
    std::copy(payload.begin(), payload.end(), p.begin() + 20);
    return p;
  }

  static uint16_t transport_checksum(uint32_t src, uint32_t dst, uint8_t proto,
                                     const Bytes& seg) {
    Bytes pseudo(12 + seg.size());
    wr32(pseudo, 0, src);
    wr32(pseudo, 4, dst);
    pseudo[8] = 0;
    pseudo[9] = proto;
    wr16(pseudo, 10, uint16_t(seg.size()));
    std::copy(seg.begin(), seg.end(), pseudo.begin() + 12);
    uint16_t c = internet_checksum(pseudo);
    return c == 0 ? 0xffff : c;
  }

  Bytes udp_segment(uint32_t sip, uint32_t dip, uint16_t sport, uint16_t dport,
                    const Bytes& payload) const {
    Bytes s(8 + payload.size());
    wr16(s, 0, sport);
    wr16(s, 2, dport);
    wr16(s, 4, uint16_t(s.size()));
    std::copy(payload.begin(), payload.end(), s.begin() + 8);
    wr16(s, 6, transport_checksum(sip, dip, 17, s));
    return s;
  }

  Bytes tcp_segment(uint32_t sip, uint32_t dip, uint16_t sport, uint16_t dport,
                    uint32_t seq, uint32_t ack, uint8_t flags,
                    const Bytes& payload) const {
    Bytes s(20 + payload.size());
    wr16(s, 0, sport);
    wr16(s, 2, dport);
    wr32(s, 4, seq);
    wr32(s, 8, ack);
    s[12] = 0x50;  // data offset 5
    s[13] = flags;
    wr16(s, 14, 0x1000);  // window
    std::copy(payload.begin(), payload.end(), s.begin() + 20);
    wr16(s, 16, transport_checksum(sip, dip, 6, s));
    return s;
  }

  // BOOTP body with the message-type option first and an end option after,
  // matching what every client on this network emits.
  Bytes dhcp_body(uint8_t op, uint32_t xid, uint32_t yiaddr, uint32_t siaddr,
                  uint8_t msg_type) const {
    Bytes d(244, 0);
    d[0] = op;
    d[1] = 1;  // ethernet
    d[2] = 6;
    wr32(d, 4, xid);
    wr16(d, 10, 0x8000);  // broadcast flag
    wr32(d, 16, yiaddr);
    wr32(d, 20, siaddr);
    std::copy(prof_.mac.begin(), prof_.mac.end(), d.begin() + 28);
    wr32(d, 236, 0x63825363);
    d[240] = 53;
    d[241] = 1;
    d[242] = msg_type;
    d[243] = 0xff;
    return d;
  }

  void emit_discover() {
    static const uint8_t bcast[6] = {0xff, 0xff, 0xff, 0xff, 0xff, 0xff};
    trace(blk::kDhcpDiscoverTx);
    Bytes body = dhcp_body(1, xid_, 0, 0, 1);
    Bytes seg = udp_segment(0, 0xffffffff, 68, 67, body);
    Bytes ip = ipv4_packet(0, 0xffffffff, 17, seg);
    outbox_.push_back(eth_frame(bcast, prof_.mac.data(), 0x0800, ip));
  }

  void emit_request(uint32_t requested) {
    static const uint8_t bcast[6] = {0xff, 0xff, 0xff, 0xff, 0xff, 0xff};
    trace(blk::kDhcpRequestTx);
    Bytes body = dhcp_body(1, xid_, 0, 0, 3);
    wr32(body, 12, requested);  // ciaddr slot carries the requested address
    Bytes seg = udp_segment(0, 0xffffffff, 68, 67, body);
    Bytes ip = ipv4_packet(0, 0xffffffff, 17, seg);
    outbox_.push_back(eth_frame(bcast, prof_.mac.data(), 0x0800, ip));
  }

  void emit_gratuitous_arp(uint32_t ip) {
    static const uint8_t bcast[6] = {0xff, 0xff, 0xff, 0xff, 0xff, 0xff};
    Bytes a(28, 0);
    wr16(a, 0, 1);       // ethernet
    wr16(a, 2, 0x0800);  // ipv4
    a[4] = 6;
    a[5] = 4;
    wr16(a, 6, 1);  // request, asking about our own address
    std::copy(prof_.mac.begin(), prof_.mac.end(), a.begin() + 8);
    wr32(a, 14, ip);
    wr32(a, 24, ip);  // target ip == sender ip: an announcement
    outbox_.push_back(eth_frame(bcast, prof_.mac.data(), 0x0806, a));
  }

  void emit_arp_reply(const RxMeta& rx, uint32_t our_ip) {
    trace(blk::kArpReplyTx);
    Bytes a(28, 0);
    wr16(a, 0, 1);
    wr16(a, 2, 0x0800);
    a[4] = 6;
    a[5] = 4;
    wr16(a, 6, 2);
    std::copy(prof_.mac.begin(), prof_.mac.end(), a.begin() + 8);
    wr32(a, 14, our_ip);
    std::copy(rx.src_mac.begin(), rx.src_mac.end(), a.begin() + 18);
    wr32(a, 24, rx.src_ip);
    outbox_.push_back(eth_frame(rx.src_mac.data(), prof_.mac.data(), 0x0806, a));
  }

  // --- inbound, ethernet dialect ------------------------------------------

  void on_ethernet(const Bytes& f) {
    if (f.size() < 14) {
      pool();
      return;
    }
    bool bcast = true, mine = true;
    for (size_t i = 0; i < 6; ++i) {
      bcast = bcast && f[i] == 0xff;
      mine = mine && f[i] == prof_.mac[i];
    }
    if (prof_.verify_dest_address && !bcast && !mine) {
      pool();  // not for us: the first gate, nothing named
      return;
    }
    trace(bcast ? blk::kEthDstBroadcast : blk::kEthDstUnicast);
    RxMeta rx;
    std::copy(f.begin() + 6, f.begin() + 12, rx.src_mac.begin());
    uint16_t type = rd16(f, 12);
    Bytes payload(f.begin() + 14, f.end());
    if (type == 0x0800) {
      trace(blk::kEthTypeIpv4);
      on_ipv4(payload, rx);
    } else if (type == 0x0806) {
      trace(blk::kEthTypeArp);
      on_arp(payload, rx);
    } else {
      trace(blk::kEthTypeUnknown);
      pool();
    }
  }

  void on_arp(const Bytes& a, RxMeta rx) {
    if (a.size() < 28) {
      trace(blk::kArpRunt);
      pool();
      return;
    }
    if (rd16(a, 0) != 1 || rd16(a, 2) != 0x0800 || a[4] != 6 || a[5] != 4) {
      trace(blk::kArpHdrBad);
      pool();
      return;
    }
    trace(blk::kArpHdrOk);
    uint16_t oper = rd16(a, 6);
    uint32_t sender_ip = rd32(a, 14);
    uint32_t target_ip = rd32(a, 24);
    rx.src_ip = sender_ip;
    if (oper == 1) {
      trace(blk::kArpReqRx);
      if (sender_ip == target_ip) {
        // Someone announcing themselves; remember them, say nothing.
        trace(blk::kArpGratuitous);
        store_arp(a, sender_ip);
        return;
      }
      if (ip() != 0 && target_ip == ip()) {
        store_arp(a, sender_ip);
        emit_arp_reply(rx, ip());
        return;
      }
      trace(blk::kArpNotMine);
      pool();
      return;
    }
    if (oper == 2) {
      trace(blk::kArpReplyRx);
      store_arp(a, sender_ip);
      return;
    }
    trace(blk::kArpOperUnknown);
    pool();
  }

  void store_arp(const Bytes& a, uint32_t sender_ip) {
    trace(blk::kArpCacheStore);
    std::array<uint8_t, 6> mac;
    std::copy(a.begin() + 8, a.begin() + 14, mac.begin());
    arp_cache_[sender_ip] = mac;
  }

  void on_ipv4(const Bytes& p, RxMeta rx) {
    if (p.size() < 20) {
      trace(blk::kIpRunt);
      pool();
      return;
    }
    if ((p[0] >> 4) != 4) {
      trace(blk::kIpBadVersion);
      pool();
      return;
    }
    if ((p[0] & 0x0f) != 5) {
      trace(blk::kIpOptionsUnsupported);
      pool();
      return;
    }
    trace(blk::kIpVersionOk);
    uint16_t total = rd16(p, 2);
    if (total < 20 || total > p.size()) {
      trace(blk::kIpBadLength);
      pool();
      return;
    }
    if (prof_.verify_ip_checksum) {
      if (internet_checksum(p.data(), 20) != 0) {
        trace(blk::kIpCsumBad);
        pool();
        return;
      }
      trace(blk::kIpCsumOk);
    }
    uint16_t frag = rd16(p, 6);
    if ((frag & 0x2000) || (frag & 0x1fff)) {
      trace(blk::kIpFragUnsupported);
      pool();
      return;
    }
    rx.src_ip = rd32(p, 12);
    rx.dst_ip = rd32(p, 16);
    if (prof_.verify_dest_address) {
      if (rx.dst_ip == 0xffffffff) {
        trace(blk::kIpDstBcast);
      } else if (ip() != 0 && rx.dst_ip == ip()) {
        trace(blk::kIpDstUnicast);
      } else {
        trace(blk::kIpDstMiss);
        pool();
        return;
      }
    }
    uint8_t proto = p[9];
    Bytes seg(p.begin() + 20, p.begin() + total);
    if (proto == 17 && prof_.static_ip == 0) {
      trace(blk::kIpProtoUdp);
      on_udp(seg, rx);
    } else if (proto == 6 && prof_.static_ip != 0) {
      trace(blk::kIpProtoTcp);
      on_tcp(seg, rx);
    } else {
      trace(blk::kIpProtoUnhandled);
      pool();
    }
  }

  void on_udp(const Bytes& s, const RxMeta& rx) {
    if (s.size() < 8) {
      trace(blk::kUdpRunt);
      pool();
      return;
    }
    if (rd16(s, 4) != s.size()) {
      trace(blk::kUdpLenBad);
      pool();
      return;
    }
    trace(blk::kUdpLenOk);
    uint16_t csum = rd16(s, 6);
    if (csum == 0) {
      trace(blk::kUdpCsumAbsent);  // sender opted out; tolerated
    } else if (prof_.verify_udp_checksum) {
      if (transport_checksum(rx.src_ip, rx.dst_ip, 17, zeroed_csum(s, 6)) !=
          csum) {
        trace(blk::kUdpCsumBad);
        pool();
        return;
      }
      trace(blk::kUdpCsumOk);
    }
    trace(blk::kUdpAccept);
    uint16_t sport = rd16(s, 0);
    uint16_t dport = rd16(s, 2);
    Bytes payload(s.begin() + 8, s.end());
    if (dport == 68) {
      on_dhcp_reply(payload);
      return;
    }
    // The echo service answers on any other port.
    trace(blk::kAppUdpEcho);
    trace(blk::kUdpEchoTx);
    Bytes seg = udp_segment(ip(), rx.src_ip, dport, sport, payload);
    Bytes ipkt = ipv4_packet(ip(), rx.src_ip, 17, seg);
    outbox_.push_back(eth_frame(rx.src_mac.data(), prof_.mac.data(), 0x0800,
                                ipkt));
  }

  static Bytes zeroed_csum(Bytes s, size_t off) {
    s[off] = 0;
    s[off + 1] = 0;
    return s;
  }

  void on_dhcp_reply(const Bytes& d) {
    trace(blk::kDhcpPort);
    if (d.size() < 243) {
      trace(blk::kDhcpRunt);
      pool();
      return;
    }
    if (d[0] != 2) {
      trace(blk::kDhcpOpBad);
      pool();
      return;
    }
    trace(blk::kDhcpOpOk);
    if (rd32(d, 236) != 0x63825363) {
      trace(blk::kDhcpCookieBad);
      pool();
      return;
    }
    trace(blk::kDhcpCookieOk);
    if (rd32(d, 4) != xid_) {
      trace(blk::kDhcpXidMiss);
      pool();
      return;
    }
    trace(blk::kDhcpXidMatch);
    if (d[240] != 53 || d[241] != 1) {
      trace(blk::kDhcpTypeOther);
      pool();
      return;
    }
    uint8_t msg = d[242];
    if (msg == 2) {  // OFFER
      if (dhcp_ != DhcpPhase::kDiscoverSent) {
        trace(blk::kDhcpUnexpected);
        pool();
        return;
      }
      trace(blk::kDhcpOfferRx);
      offered_ip_ = rd32(d, 16);
      dhcp_ = DhcpPhase::kRequestSent;
      emit_request(offered_ip_);
      return;
    }
    if (msg == 5) {  // ACK
      if (dhcp_ != DhcpPhase::kRequestSent) {
        trace(blk::kDhcpUnexpected);
        pool();
        return;
      }
      trace(blk::kDhcpAckRx);
      trace(blk::kDhcpLeased);
      leased_ip_ = offered_ip_;
      dhcp_ = DhcpPhase::kLeased;
      // Claim the address out loud, twice, like a well-behaved client.
      trace(blk::kArpAnnounceTx);
      emit_gratuitous_arp(leased_ip_);
      trace(blk::kArpAnnounceTx);
      emit_gratuitous_arp(leased_ip_);
      return;
    }
    trace(blk::kDhcpTypeOther);
    pool();
  }

  void on_tcp(const Bytes& s, const RxMeta& rx) {
    if (s.size() < 20) {
      trace(blk::kTcpRunt);
      pool();
      return;
    }
    if ((s[12] >> 4) != 5) {
      trace(blk::kTcpOptionsUnsupported);
      pool();
      return;
    }
    trace(blk::kTcpSegOk);
    uint16_t csum = rd16(s, 16);
    if (transport_checksum(rx.src_ip, rx.dst_ip, 6, zeroed_csum(s, 16)) !=
        csum) {
      trace(blk::kTcpCsumBad);
      pool();
      return;
    }
    trace(blk::kTcpCsumOk);
    uint16_t sport = rd16(s, 0);
    uint16_t dport = rd16(s, 2);
    uint32_t seq = rd32(s, 4);
    uint32_t ack = rd32(s, 8);
    uint8_t flags = s[13];
    Bytes payload(s.begin() + 20, s.end());

    if (flags & 0x04) {  // RST
      trace(blk::kTcpRstRx);
      tcp_ = TcpConn{};
      return;
    }
    if ((flags & 0x02) && !(flags & 0x10)) {  // SYN
      if (tcp_.open) {
        trace(blk::kTcpSynDup);
      } else {
        trace(blk::kTcpSynRx);
      }
      tcp_.open = true;
      tcp_.established = false;
      tcp_.peer_mac = rx.src_mac;
      tcp_.peer_ip = rx.src_ip;
      tcp_.peer_port = sport;
      tcp_.local_port = dport;
      tcp_.rcv_nxt = seq + 1;
      tcp_.snd_nxt = kTcpIsn + 1;
      trace(blk::kTcpSynAckTx);
      send_tcp(kTcpIsn, tcp_.rcv_nxt, 0x12, Bytes());
      return;
    }
    if (!tcp_.open || rx.src_ip != tcp_.peer_ip || sport != tcp_.peer_port ||
        dport != tcp_.local_port) {
      trace(blk::kTcpNoConn);
      pool();
      return;
    }
    if (!tcp_.established) {
      if ((flags & 0x10) && seq == tcp_.rcv_nxt && ack == tcp_.snd_nxt) {
        trace(blk::kTcpEstablished);
        tcp_.established = true;
        if (!payload.empty()) deliver_tcp(payload);
        return;
      }
      trace(blk::kTcpBadAck);
      pool();
      return;
    }
    if (!payload.empty()) {
      if (seq != tcp_.rcv_nxt) {
        trace(blk::kTcpSeqMiss);
        pool();
        return;
      }
      deliver_tcp(payload);
      return;
    }
    // Bare in-window ACK: nothing owed.
  }

  void deliver_tcp(const Bytes& payload) {
    trace(blk::kTcpDataRx);
    tcp_.rcv_nxt += uint32_t(payload.size());
    Bytes response;
    if (prof_.name == "tcp-echo-server") {
      trace(blk::kAppTcpEcho);
      response = payload;
    } else {
      trace(blk::kAppHttpEntry);
      std::string line(payload.begin(), payload.end());
      if (line.rfind("GET ", 0) == 0) {
        trace(blk::kAppHttpGet);
        response = to_bytes("HTTP/1.0 200 OK\r\n\r\n");
      } else if (line.rfind("POST ", 0) == 0) {
        trace(blk::kAppHttpPost);
        response = to_bytes("HTTP/1.0 200 OK\r\n\r\n");
      } else {
        trace(blk::kAppHttpBadMethod);
        response = to_bytes("HTTP/1.0 400 Bad Request\r\n\r\n");
      }
    }
    trace(blk::kTcpDataTx);
    send_tcp(tcp_.snd_nxt, tcp_.rcv_nxt, 0x18, response);  // PSH|ACK
    tcp_.snd_nxt += uint32_t(response.size());
  }

  void send_tcp(uint32_t seq, uint32_t ack, uint8_t flags,
                const Bytes& payload) {
    Bytes seg = tcp_segment(ip(), tcp_.peer_ip, tcp_.local_port,
                            tcp_.peer_port, seq, ack, flags, payload);
    Bytes ipkt = ipv4_packet(ip(), tcp_.peer_ip, 6, seg);
    outbox_.push_back(eth_frame(tcp_.peer_mac.data(), prof_.mac.data(), 0x0800,
                                ipkt));
  }

  static Bytes to_bytes(const char* s) {
    return Bytes(s, s + std::char_traits<char>::length(s));
  }

  // --- inbound, modbus dialect --------------------------------------------

  void on_modbus(const Bytes& f) {
    if (f.size() < 4) {
      pool();  // not even a CRC to check: first gate
      return;
    }
    uint16_t want = uint16_t(f[f.size() - 2]) | uint16_t(f[f.size() - 1]) << 8;
    if (crc16_modbus(f.data(), f.size() - 2) != want) {
      pool();  // line noise: first gate
      return;
    }
    trace(blk::kMbCrcOk);
    if (f.size() < 5) {
      trace(blk::kMbLenBad);
      pool();
      return;
    }
    trace(blk::kMbFrameOk);
    uint8_t unit = f[0];
    bool broadcast = unit == 0;
    if (broadcast) {
      trace(blk::kMbBroadcast);
    } else if (unit == prof_.unit_id) {
      trace(blk::kMbUnitOk);
    } else {
      trace(blk::kMbUnitMiss);
      pool();
      return;
    }
    uint8_t fn = f[1];
    uint8_t len = f[2];
    if (size_t(len) + 5 != f.size()) {
      trace(blk::kMbLenBad);
      pool();
      return;
    }
    trace(blk::kMbLenOk);
    Bytes body(f.begin() + 3, f.end() - 2);
    if (fn == 0x03) {
      trace(blk::kMbFnRead);
      if (body.size() != 4) {
        trace(blk::kMbReadBad);
        pool();
        if (!broadcast) send_mb_exception(unit, fn, 3);
        return;
      }
      uint16_t addr = rd16(body, 0);
      uint16_t count = rd16(body, 2);
      if (count < 1 || count > 8) {
        trace(blk::kMbCountRange);
        pool();
        if (!broadcast) send_mb_exception(unit, fn, 3);
        return;
      }
      trace(blk::kMbReadOk);
      trace(blk::kAppMbRead);
      if (broadcast) return;  // reads are not answered on broadcast
      Bytes data(size_t(count) * 2);
      for (uint16_t i = 0; i < count; ++i) {
        // Deterministic register file: value = address it lives at, xor'd
        // with a profile constant.
        uint16_t v = uint16_t((addr + i) ^ 0xA5A5);
        data[i * 2] = uint8_t(v >> 8);
        data[i * 2 + 1] = uint8_t(v);
      }
      send_mb(unit, 0x03, data);
      return;
    }
    if (fn == 0x06) {
      trace(blk::kMbFnWrite);
      if (body.size() != 4) {
        trace(blk::kMbWriteBad);
        pool();
        if (!broadcast) send_mb_exception(unit, fn, 3);
        return;
      }
      trace(blk::kMbWriteOk);
      trace(blk::kAppMbWrite);
      if (!broadcast) send_mb(unit, 0x06, body);  // write echoes the request
      return;
    }
    trace(blk::kMbFnUnsupported);
    pool();
    if (!broadcast) send_mb_exception(unit, fn, 1);
  }

  void send_mb(uint8_t unit, uint8_t fn, const Bytes& body) {
    Bytes f(3 + body.size() + 2);
    f[0] = unit;
    f[1] = fn;
    f[2] = uint8_t(body.size());
    std::copy(body.begin(), body.end(), f.begin() + 3);
    uint16_t crc = crc16_modbus(f.data(), f.size() - 2);
    f[f.size() - 2] = uint8_t(crc & 0xff);
    f[f.size() - 1] = uint8_t(crc >> 8);
    outbox_.push_back(std::move(f));
  }

  void send_mb_exception(uint8_t unit, uint8_t fn, uint8_t code) {
    send_mb(unit, fn | 0x80, Bytes{code});
  }

  EnsProfile prof_;
  uint64_t seed_;
  std::vector<uint32_t> trace_;
  std::vector<Bytes> outbox_;
  uint64_t step_count_ = 0;
  uint64_t reset_count_ = 0;

  std::map<uint32_t, std::array<uint8_t, 6>> arp_cache_;
  DhcpPhase dhcp_ = DhcpPhase::kNone;
  uint32_t xid_ = 0;
  uint32_t leased_ip_ = 0;
  uint32_t offered_ip_ = 0;
  TcpConn tcp_;
};

}  // namespace netweave
