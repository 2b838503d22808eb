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

#include "netweave/checksum.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "netweave/handlers.hpp"
#include "oracles.hpp"

using namespace netweave;

TEST_CASE("internet checksum matches the published reference vectors") {
  // RFC 1071 worked example.
  Bytes rfc = {0x00, 0x01, 0xf2, 0x03, 0xf4, 0xf5, 0xf6, 0xf7};
  REQUIRE(internet_checksum(rfc.data(), rfc.size()) == 0x220d);

  // A routinely quoted IPv4 header example.
  Bytes wiki = {0x45, 0x00, 0x00, 0x73, 0x00, 0x00, 0x40, 0x00, 0x40, 0x11,
                0x00, 0x00, 0xc0, 0xa8, 0x00, 0x01, 0xc0, 0xa8, 0x00, 0xc7};
  REQUIRE(internet_checksum(wiki.data(), wiki.size()) == 0xb861);
}

TEST_CASE("internet checksum frozen vectors") {
  Bytes zeros(20, 0);
  REQUIRE(internet_checksum(zeros.data(), zeros.size()) == 0xffff);

  Bytes odd = {0x01, 0x02, 0x03};  // odd length pads with a zero byte
  REQUIRE(internet_checksum(odd.data(), odd.size()) == 0xfbfd);

  Bytes hdr = {0x45, 0x00, 0x00, 0x54, 0x1c, 0x46, 0x40, 0x00, 0x40, 0x01,
               0x00, 0x00, 0x0a, 0x00, 0x00, 0x01, 0x0a, 0x00, 0x00, 0x05};
  REQUIRE(internet_checksum(hdr.data(), hdr.size()) == 0x0a5e);
}

TEST_CASE("internet checksum is invariant under 16-bit word reordering") {
  std::mt19937_64 rng(7);
  Bytes data(32);
  for (auto& b : data) b = uint8_t(rng());
  uint16_t ref = internet_checksum(data.data(), data.size());
  for (int i = 0; i < 50; ++i) {
    Bytes words = data;
    for (size_t w = words.size() / 2; w > 1; --w) {
      size_t j = rng() % w;
      std::swap(words[2 * (w - 1)], words[2 * j]);
      std::swap(words[2 * (w - 1) + 1], words[2 * j + 1]);
    }
    REQUIRE(internet_checksum(words.data(), words.size()) == ref);
  }
}

TEST_CASE("patching the checksum field makes the datagram sum to all-ones") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 10000; ++i) {
    Bytes pkt(20 + rng() % 64);
    for (auto& b : pkt) b = uint8_t(rng());
    pkt[10] = pkt[11] = 0;
    uint16_t c = internet_checksum(pkt.data(), pkt.size());
    pkt[10] = uint8_t(c >> 8);
    pkt[11] = uint8_t(c & 0xff);
    REQUIRE(ones_complement_sum(pkt.data(), pkt.size()) == 0xffff);
  }
}

TEST_CASE("crc16 matches the published check value") {
  std::string s = "123456789";
  REQUIRE(crc16_modbus(reinterpret_cast<const uint8_t*>(s.data()), s.size()) ==
          0x4b37);
}

TEST_CASE("crc16 frozen vectors") {
  Bytes one = {0x00};
  REQUIRE(crc16_modbus(one.data(), 1) == 0x40bf);
  Bytes read_req = {0x01, 0x03, 0x00, 0x00, 0x00, 0x01};
  REQUIRE(crc16_modbus(read_req.data(), read_req.size()) == 0x0a84);
  Bytes write_req = {0x01, 0x06, 0x00, 0x10, 0x00, 0x2a};
  REQUIRE(crc16_modbus(write_req.data(), write_req.size()) == 0xd009);
}

TEST_CASE("crc16 agrees with the bitwise oracle on random input") {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 2000; ++i) {
    Bytes data(1 + rng() % 40);
    for (auto& b : data) b = uint8_t(rng());
    REQUIRE(crc16_modbus(data.data(), data.size()) ==
            oracle::crc16_modbus_bitwise(data));
  }
}

TEST_CASE("crc16 rejects empty input") {
  Bytes none;
  REQUIRE_THROWS_AS(crc16_modbus(none.data(), 0), EmptyInputError);
}

TEST_CASE("pseudo header checksum frozen vector") {
  // 10.0.0.1:67 -> 255.255.255.255:68, UDP, zeroed checksum field, "hi".
  Bytes seg = {0x00, 0x43, 0x00, 0x44, 0x00, 0x0a, 0x00, 0x00, 'h', 'i'};
  HandlerContext ctx;
  ctx.src_addr = BitString::from_uint(0x0a000001, 32);
  ctx.dst_addr = BitString::from_uint(0xffffffff, 32);
  ctx.protocol = 17;
  auto& reg = HandlerRegistry::builtin();
  BitString out = reg.compute("tcp-udp-pseudo-checksum", seg, {0, seg.size()}, ctx);
  REQUIRE(out.to_uint() == 0x8ce9);
  REQUIRE(out.to_uint() ==
          oracle::pseudo_header_checksum(0x0a000001u, 0xffffffffu, 17, seg));
}

TEST_CASE("udp zero result is transmitted as all-ones") {
  HandlerContext ctx;
  ctx.src_addr = BitString::from_uint(0x0a000001, 32);
  ctx.dst_addr = BitString::from_uint(0x0a000005, 32);
  ctx.protocol = 17;
  auto& reg = HandlerRegistry::builtin();

  // With a zero payload word the handler returns the complement of the
  // fixed-part sum; writing that value back as the payload word drives the
  // true checksum to zero, which must be emitted as 0xffff.
  Bytes seg = {0x00, 0x43, 0x00, 0x44, 0x00, 0x0a, 0x00, 0x00, 0x00, 0x00};
  uint16_t w = uint16_t(reg.compute("tcp-udp-pseudo-checksum", seg, {0, seg.size()}, ctx).to_uint());
  seg[8] = uint8_t(w >> 8);
  seg[9] = uint8_t(w & 0xff);
  REQUIRE(oracle::pseudo_header_checksum(0x0a000001u, 0x0a000005u, 17, seg) == 0);
  REQUIRE(reg.compute("tcp-udp-pseudo-checksum", seg, {0, seg.size()}, ctx).to_uint() == 0xffff);
}

TEST_CASE("handler compute and verify are inverses") {
  auto& reg = HandlerRegistry::builtin();
  std::mt19937_64 rng(19);

  SECTION("internet-checksum over a header with an embedded zeroed field") {
    for (int i = 0; i < 1000; ++i) {
      Bytes hdr(20);
      for (auto& b : hdr) b = uint8_t(rng());
      hdr[10] = hdr[11] = 0;
      HandlerContext ctx;
      BitString c = reg.compute("internet-checksum", hdr, {0, hdr.size()}, ctx);
      hdr[10] = uint8_t(c.to_uint() >> 8);
      hdr[11] = uint8_t(c.to_uint() & 0xff);
      REQUIRE(reg.verify("internet-checksum", hdr, {0, hdr.size()}, ctx));
      hdr[3] ^= 1;
      REQUIRE_FALSE(reg.verify("internet-checksum", hdr, {0, hdr.size()}, ctx));
    }
  }

  SECTION("crc16 verifies against the trailing field value") {
    for (int i = 0; i < 1000; ++i) {
      Bytes body(2 + rng() % 30);
      for (auto& b : body) b = uint8_t(rng());
      HandlerContext ctx;
      BitString c = reg.compute("crc16-modbus", body, {0, body.size()}, ctx);
      ctx.field_value = c;
      REQUIRE(reg.verify("crc16-modbus", body, {0, body.size()}, ctx));
      ctx.field_value = BitString::from_uint(c.to_uint() ^ 1, 16);
      REQUIRE_FALSE(reg.verify("crc16-modbus", body, {0, body.size()}, ctx));
    }
  }
}

TEST_CASE("handler invocations are counted") {
  auto& reg = HandlerRegistry::builtin();
  uint64_t before = handler_invocation_counter().load();
  HandlerContext ctx;
  Bytes data = {1, 2, 3, 4};
  reg.compute("internet-checksum", data, {0, data.size()}, ctx);
  ctx.field_value = BitString::from_uint(0, 16);
  reg.verify("internet-checksum", data, {0, data.size()}, ctx);
  REQUIRE(handler_invocation_counter().load() == before + 2);
}

TEST_CASE("unknown handlers are rejected") {
  auto& reg = HandlerRegistry::builtin();
  REQUIRE(reg.contains("internet-checksum"));
  REQUIRE(reg.contains("tcp-udp-pseudo-checksum"));
  REQUIRE(reg.contains("crc16-modbus"));
  REQUIRE_FALSE(reg.contains("fletcher32"));
  HandlerContext ctx;
  Bytes data = {1};
  REQUIRE_THROWS_AS(reg.compute("fletcher32", data, {0, data.size()}, ctx), UnknownHandlerError);
}
