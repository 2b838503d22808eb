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

#include "netweave/bitstring.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace netweave;

TEST_CASE("uint round trip across every width") {
  for (size_t w = 1; w <= 64; ++w) {
    uint64_t top = (w == 64) ? ~0ull : ((1ull << w) - 1);
    for (uint64_t v : {uint64_t(0), uint64_t(1), top / 2, top}) {
      BitString b = BitString::from_uint(v, w);
      REQUIRE(b.width() == w);
      REQUIRE(b.to_uint() == v);
    }
  }
}

TEST_CASE("values are packed MSB first") {
  // Two nibbles written back to back land as one 0x45 byte.
  Bytes buf(1, 0);
  write_bits(buf, 0, BitString::from_uint(0b0100, 4));
  write_bits(buf, 4, BitString::from_uint(0b0101, 4));
  REQUIRE(buf == Bytes{0x45});

  BitString b = BitString::from_uint(0b0100, 4);
  REQUIRE(b.bytes() == Bytes{0x40});  // high nibble, pad bits zero
}

TEST_CASE("big endian multi-byte layout") {
  BitString v = BitString::from_uint(0x0800, 16);
  REQUIRE(v.bytes() == Bytes{0x08, 0x00});

  Bytes buf(2, 0xee);
  write_bits(buf, 0, v);
  REQUIRE(buf == Bytes{0x08, 0x00});
}

TEST_CASE("little endian fields are the byte mirror") {
  BitString v = BitString::from_uint(0xB880, 16);
  REQUIRE(v.reversed_bytes().bytes() == Bytes{0x80, 0xB8});
  REQUIRE(v.reversed_bytes().reversed_bytes() == v);
  REQUIRE_THROWS_AS(BitString::from_uint(3, 7).reversed_bytes(), Error);
}

TEST_CASE("write then read round trips at unaligned offsets") {
  for (size_t w = 1; w <= 64; ++w) {
    for (size_t off : {size_t(0), size_t(1), size_t(3), size_t(7), size_t(13)}) {
      Bytes buf((off + w + 7) / 8 + 2, 0xa5);
      uint64_t v = (0x9e3779b97f4a7c15ull * (w + off)) >>
                   (w == 64 ? 0 : (64 - w));
      BitString in = BitString::from_uint(v, w);
      write_bits(buf, off, in);
      REQUIRE(read_bits(buf, off, w) == in);
      REQUIRE(read_bits(buf, off, w).to_uint() == v);
    }
  }
}

TEST_CASE("neighbouring fields are left untouched") {
  Bytes buf(4, 0xff);
  write_bits(buf, 10, BitString::zeros(7));
  // Bits 0..9 and 17..31 stay set.
  REQUIRE(read_bits(buf, 0, 10).to_uint() == 0x3ff);
  REQUIRE(read_bits(buf, 10, 7).to_uint() == 0);
  REQUIRE(read_bits(buf, 17, 15).to_uint() == 0x7fff);
}

TEST_CASE("from_uint rejects values wider than the field") {
  REQUIRE_THROWS_AS(BitString::from_uint(0x10, 4), Error);
  REQUIRE_THROWS_AS(BitString::from_uint(2, 1), Error);
  REQUIRE_NOTHROW(BitString::from_uint(0xf, 4));
}

TEST_CASE("value literals") {
  REQUIRE(parse_value_literal("0x45", 8).to_uint() == 0x45);
  REQUIRE(parse_value_literal("17", 8).to_uint() == 17);
  REQUIRE(parse_value_literal("0b0100", 4).to_uint() == 4);
  REQUIRE(parse_value_literal("10.0.0.5", 32).to_uint() == 0x0a000005);
  REQUIRE(parse_value_literal("255.255.255.255", 32).to_uint() == 0xffffffff);
  REQUIRE(parse_value_literal("ff:ff:ff:ff:ff:ff", 48).bytes() ==
          Bytes(6, 0xff));
  REQUIRE(parse_value_literal("02:00:00:00:00:01", 48).to_hex() ==
          "020000000001");
  REQUIRE(parse_value_literal("de:ad", 16).to_uint() == 0xdead);

  REQUIRE_THROWS_AS(parse_value_literal("10.0.0.5", 16), Error);
  REQUIRE_THROWS_AS(parse_value_literal("de:ad", 8), Error);
  REQUIRE_THROWS_AS(parse_value_literal("256.0.0.1", 32), Error);
  REQUIRE_THROWS_AS(parse_value_literal("0x100", 8), Error);
  REQUIRE_THROWS_AS(parse_value_literal("zz", 8), Error);
  REQUIRE_THROWS_AS(parse_value_literal("", 8), Error);
}

TEST_CASE("hex rendering and ordering") {
  REQUIRE(BitString::from_uint(0xdeadbeef, 32).to_hex() == "deadbeef");
  REQUIRE(BitString::zeros(12).is_zero());
  REQUIRE_FALSE(BitString::from_uint(1, 12).is_zero());
  REQUIRE(BitString::from_uint(1, 8) < BitString::from_uint(2, 8));
  REQUIRE(BitString::from_uint(1, 8) < BitString::from_uint(0, 16));
  REQUIRE(BitString::from_bytes({0xab, 0xcd}) ==
          BitString::from_uint(0xabcd, 16));
}
