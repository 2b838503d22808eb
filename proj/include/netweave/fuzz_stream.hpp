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

#include "netweave/bitstring.hpp"
#include "netweave/errors.hpp"

namespace netweave {

// Serial cursor over one fuzz input. Every byte the encapsulator spends is
// booked into exactly one of three buckets so tests can prove conservation:
//   control: depth selectors, body-length selectors, fault selectors
//   field:   bytes consumed filling fixed-width Fuzzed fields
//   body:    bytes copied verbatim into variable body fields / raw frames
//
// A zeroed stream (probe and handshake assembly) yields zero bits forever and
// never runs dry; consumption accounting stays at zero.
class FuzzStream {
 public:
  FuzzStream() : zeroed_(true) {}
  explicit FuzzStream(Bytes data) : data_(std::move(data)), zeroed_(false) {}

  static FuzzStream zeroes() { return FuzzStream(); }

  bool zeroed() const { return zeroed_; }
  size_t remaining() const { return zeroed_ ? size_t(-1) : data_.size() - pos_; }
  bool drained() const { return !zeroed_ && pos_ >= data_.size(); }

  // One control byte, or FuzzExhausted when the input is spent. Exhaustion
  // here means "no more packets": the caller ends the execution.
  uint8_t control_byte() {
    if (zeroed_) return 0;
    if (pos_ >= data_.size()) throw FuzzExhausted("fuzz input spent");
    ++control_bytes_;
    return data_[pos_++];
  }

  // Fixed-width field fill: ceil(width/8) bytes, value = low `width` bits,
  // big-endian. Running dry mid-field zero-pads the tail so short inputs
  // still produce a complete frame for the layers below.
  BitString field_bits(size_t width) {
    size_t need = (width + 7) / 8;
    uint64_t v = 0;
    Bytes wide;
    for (size_t i = 0; i < need; ++i) {
      uint8_t b = 0;
      if (zeroed_) {
        b = 0;
      } else if (pos_ < data_.size()) {
        b = data_[pos_++];
        ++field_bytes_;
      }
      if (width <= 64) {
        v = (v << 8) | b;
      } else {
        wide.push_back(b);
      }
    }
    if (width > 64) {
      // Whole-byte widths only above 64 bits; grammar loader guarantees it.
      return BitString::from_bytes(wide);
    }
    if (width < 64) v &= (uint64_t(1) << width) - 1;
    return BitString::from_uint(v, width);
  }

  // Up to n verbatim body bytes; truncates when the input runs dry.
  Bytes body_bytes(size_t n) {
    if (zeroed_) return Bytes(n, 0);
    size_t take = std::min(n, data_.size() - pos_);
    Bytes out(data_.begin() + long(pos_), data_.begin() + long(pos_ + take));
    pos_ += take;
    body_bytes_ += take;
    return out;
  }

  // Everything left, booked as body (raw-frame plan).
  Bytes rest() {
    if (zeroed_) return Bytes();
    return body_bytes(data_.size() - pos_);
  }

  size_t control_consumed() const { return control_bytes_; }
  size_t field_consumed() const { return field_bytes_; }
  size_t body_consumed() const { return body_bytes_; }
  size_t total_consumed() const {
    return control_bytes_ + field_bytes_ + body_bytes_;
  }

 private:
  Bytes data_;
  size_t pos_ = 0;
  bool zeroed_;
  size_t control_bytes_ = 0;
  size_t field_bytes_ = 0;
  size_t body_bytes_ = 0;
};

}  // namespace netweave
