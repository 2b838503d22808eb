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

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "netweave/errors.hpp"

namespace netweave {

using Bytes = std::vector<uint8_t>;

// Fixed-width bit value. Bits are packed MSB-first: bit 0 is the most
// significant bit of byte 0. A 4-bit value 0b0100 occupies the high nibble
// of its single byte; trailing pad bits in the last byte are always zero.
class BitString {
 public:
  BitString() = default;

  static BitString zeros(size_t width) {
    BitString b;
    b.width_ = width;
    b.bytes_.assign((width + 7) / 8, 0);
    return b;
  }

  static BitString from_uint(uint64_t value, size_t width) {
    if (width > 64) throw Error("from_uint: width > 64");
    if (width < 64 && value >> width) {
      throw Error("from_uint: value does not fit in width");
    }
    BitString b = zeros(width);
    for (size_t i = 0; i < width; ++i) {
      if ((value >> (width - 1 - i)) & 1) b.set_bit(i);
    }
    return b;
  }

  // Whole bytes, width = 8 * n.
  static BitString from_bytes(const Bytes& raw) {
    BitString b;
    b.bytes_ = raw;
    b.width_ = raw.size() * 8;
    return b;
  }

  static BitString from_bytes(const uint8_t* raw, size_t n) {
    BitString b;
    b.bytes_.assign(raw, raw + n);
    b.width_ = n * 8;
    return b;
  }

  size_t width() const { return width_; }
  bool empty() const { return width_ == 0; }
  const Bytes& bytes() const { return bytes_; }

  bool bit(size_t i) const {
    return (bytes_[i / 8] >> (7 - i % 8)) & 1;
  }

  void set_bit(size_t i) { bytes_[i / 8] |= uint8_t(1u << (7 - i % 8)); }

  uint64_t to_uint() const {
    if (width_ > 64) throw Error("to_uint: width > 64");
    uint64_t v = 0;
    for (size_t i = 0; i < width_; ++i) v = (v << 1) | (bit(i) ? 1 : 0);
    return v;
  }

  bool is_zero() const {
    return std::all_of(bytes_.begin(), bytes_.end(),
                       [](uint8_t b) { return b == 0; });
  }

  // Byte-order mirror, for little-endian fields. Whole-byte widths only.
  BitString reversed_bytes() const {
    if (width_ % 8 != 0) throw Error("reversed_bytes: width not whole bytes");
    BitString b = *this;
    std::reverse(b.bytes_.begin(), b.bytes_.end());
    return b;
  }

  std::string to_hex() const {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(bytes_.size() * 2);
    for (uint8_t b : bytes_) {
      out.push_back(digits[b >> 4]);
      out.push_back(digits[b & 0xf]);
    }
    return out;
  }

  bool operator==(const BitString& o) const {
    return width_ == o.width_ && bytes_ == o.bytes_;
  }
  bool operator!=(const BitString& o) const { return !(*this == o); }
  bool operator<(const BitString& o) const {
    if (width_ != o.width_) return width_ < o.width_;
    return bytes_ < o.bytes_;
  }

 private:
  Bytes bytes_;
  size_t width_ = 0;
};

namespace detail {

inline bool parse_uint_literal(const std::string& text, uint64_t& out) {
  try {
    size_t pos = 0;
    if (text.size() > 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) {
      out = std::stoull(text.substr(2), &pos, 16);
      return pos == text.size() - 2;
    }
    if (text.size() > 2 && text[0] == '0' && (text[1] == 'b' || text[1] == 'B')) {
      out = std::stoull(text.substr(2), &pos, 2);
      return pos == text.size() - 2;
    }
    out = std::stoull(text, &pos, 10);
    return pos == text.size();
  } catch (...) {
    return false;
  }
}

inline int hex_nibble(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace detail

// Value literals accepted in grammar documents: plain/hex/binary integers,
// dotted quads (10.0.0.1) and colon-separated hex bytes (ff:ff:ff:ff:ff:ff).
// The declared field width is authoritative; the literal must fit it.
inline BitString parse_value_literal(const std::string& text, size_t width) {
  if (text.find(':') != std::string::npos) {
    Bytes raw;
    size_t start = 0;
    while (start <= text.size()) {
      size_t end = text.find(':', start);
      std::string part = text.substr(
          start, end == std::string::npos ? std::string::npos : end - start);
      if (part.size() != 2 || detail::hex_nibble(part[0]) < 0 ||
          detail::hex_nibble(part[1]) < 0) {
        throw Error("bad colon-hex literal: " + text);
      }
      raw.push_back(uint8_t(detail::hex_nibble(part[0]) * 16 +
                            detail::hex_nibble(part[1])));
      if (end == std::string::npos) break;
      start = end + 1;
    }
    if (raw.size() * 8 != width) {
      throw Error("literal " + text + " does not match declared width");
    }
    return BitString::from_bytes(raw);
  }
  if (std::count(text.begin(), text.end(), '.') == 3) {
    uint32_t addr = 0;
    size_t start = 0;
    for (int i = 0; i < 4; ++i) {
      size_t end = text.find('.', start);
      std::string part = text.substr(
          start, end == std::string::npos ? std::string::npos : end - start);
      uint64_t octet;
      if (!detail::parse_uint_literal(part, octet) || octet > 255) {
        throw Error("bad dotted-quad literal: " + text);
      }
      addr = (addr << 8) | uint32_t(octet);
      start = end + 1;
    }
    if (width != 32) {
      throw Error("literal " + text + " does not match declared width");
    }
    return BitString::from_uint(addr, 32);
  }
  uint64_t value;
  if (!detail::parse_uint_literal(text, value)) {
    throw Error("bad value literal: " + text);
  }
  if (width > 64 || (width < 64 && (value >> width) != 0)) {
    throw Error("literal " + text + " does not fit declared width");
  }
  return BitString::from_uint(value, width);
}

// Big-endian bit packing into a byte buffer. Offsets are in bits from the
// start of the buffer; the buffer must already be large enough.
inline void write_bits(Bytes& buf, size_t bit_off, const BitString& v) {
  for (size_t i = 0; i < v.width(); ++i) {
    size_t pos = bit_off + i;
    uint8_t mask = uint8_t(1u << (7 - pos % 8));
    if (v.bit(i)) {
      buf[pos / 8] |= mask;
    } else {
      buf[pos / 8] &= uint8_t(~mask);
    }
  }
}

inline BitString read_bits(const Bytes& buf, size_t bit_off, size_t width) {
  BitString v = BitString::zeros(width);
  for (size_t i = 0; i < width; ++i) {
    size_t pos = bit_off + i;
    if ((buf[pos / 8] >> (7 - pos % 8)) & 1) v.set_bit(i);
  }
  return v;
}

}  // namespace netweave
