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

#include "netweave/bitstring.hpp"
#include "netweave/errors.hpp"

namespace netweave {

// One's-complement sum of 16-bit big-endian words. Odd-length input is
// padded with a zero byte. Carries accumulate in 32 bits and fold at the end;
// two folds suffice for any input short of 64 KiB of 0xff.
inline uint16_t ones_complement_sum(const uint8_t* data, size_t len) {
  uint32_t sum = 0;
  size_t i = 0;
  for (; i + 1 < len; i += 2) {
    sum += uint32_t(data[i]) << 8 | data[i + 1];
  }
  if (i < len) sum += uint32_t(data[i]) << 8;
  sum = (sum & 0xffff) + (sum >> 16);
  sum = (sum & 0xffff) + (sum >> 16);
  return uint16_t(sum);
}

inline uint16_t internet_checksum(const uint8_t* data, size_t len) {
  return uint16_t(~ones_complement_sum(data, len));
}

inline uint16_t internet_checksum(const Bytes& data) {
  return internet_checksum(data.data(), data.size());
}

namespace detail {

// 256-entry table for the reflected polynomial 0xA001, built at compile time.
consteval std::array<uint16_t, 256> make_crc16_table() {
  std::array<uint16_t, 256> table{};
  for (uint16_t n = 0; n < 256; ++n) {
    uint16_t crc = n;
    for (int k = 0; k < 8; ++k) {
      crc = (crc & 1) ? uint16_t((crc >> 1) ^ 0xa001) : uint16_t(crc >> 1);
    }
    table[n] = crc;
  }
  return table;
}

inline constexpr std::array<uint16_t, 256> kCrc16Table = make_crc16_table();

}  // namespace detail

// CRC-16 as used on Modbus RTU links: init 0xFFFF, reflected 0xA001,
// transmitted least-significant byte first (the caller handles emission
// order; this returns the numeric value).
inline uint16_t crc16_modbus(const uint8_t* data, size_t len) {
  if (len == 0) throw EmptyInputError("crc16_modbus: empty input");
  uint16_t crc = 0xffff;
  for (size_t i = 0; i < len; ++i) {
    crc = uint16_t((crc >> 8) ^ detail::kCrc16Table[(crc ^ data[i]) & 0xff]);
  }
  return crc;
}

inline uint16_t crc16_modbus(const Bytes& data) {
  return crc16_modbus(data.data(), data.size());
}

}  // namespace netweave
