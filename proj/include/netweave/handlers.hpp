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

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <string>

#include "netweave/bitstring.hpp"
#include "netweave/checksum.hpp"
#include "netweave/errors.hpp"

namespace netweave {

// Half-open byte range into a frame buffer.
struct ByteRange {
  size_t begin = 0;
  size_t end = 0;
  size_t size() const { return end - begin; }
};

// Side data a handler may need beyond its scope bytes. The pseudo-header
// checksum needs the enclosing network layer's addresses and protocol; the
// caller fills them from values it already holds, so handlers never reach
// into other layers themselves. field_value carries the handler field's
// current numeric content for verifiers whose scope excludes the field.
struct HandlerContext {
  BitString src_addr;
  BitString dst_addr;
  uint8_t protocol = 0;
  BitString field_value;
};

// Global count of handler compute/verify calls. The raw-bytes campaign mode
// must leave this untouched; tests assert on the delta.
inline std::atomic<uint64_t>& handler_invocation_counter() {
  static std::atomic<uint64_t> counter{0};
  return counter;
}

class HandlerRegistry {
 public:
  using ComputeFn =
      std::function<BitString(const Bytes&, ByteRange, const HandlerContext&)>;
  using VerifyFn =
      std::function<bool(const Bytes&, ByteRange, const HandlerContext&)>;

  void add(const std::string& name, ComputeFn compute, VerifyFn verify) {
    entries_[name] = Entry{std::move(compute), std::move(verify)};
  }

  bool contains(const std::string& name) const {
    return entries_.count(name) != 0;
  }

  BitString compute(const std::string& name, const Bytes& frame,
                    ByteRange scope, const HandlerContext& ctx) const {
    handler_invocation_counter().fetch_add(1, std::memory_order_relaxed);
    return entry(name).compute(frame, scope, ctx);
  }

  bool verify(const std::string& name, const Bytes& frame, ByteRange scope,
              const HandlerContext& ctx) const {
    handler_invocation_counter().fetch_add(1, std::memory_order_relaxed);
    return entry(name).verify(frame, scope, ctx);
  }

  // The three shipped handlers.
  static const HandlerRegistry& builtin() {
    static const HandlerRegistry reg = make_builtin();
    return reg;
  }

 private:
  struct Entry {
    ComputeFn compute;
    VerifyFn verify;
  };

  const Entry& entry(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) {
      throw UnknownHandlerError("no handler named " + name);
    }
    return it->second;
  }

  static Bytes pseudo_header(const HandlerContext& ctx, size_t seg_len) {
    Bytes pre;
    pre.reserve(12 + seg_len);
    const Bytes& s = ctx.src_addr.bytes();
    const Bytes& d = ctx.dst_addr.bytes();
    pre.insert(pre.end(), s.begin(), s.end());
    pre.insert(pre.end(), d.begin(), d.end());
    pre.push_back(0);
    pre.push_back(ctx.protocol);
    pre.push_back(uint8_t(seg_len >> 8));
    pre.push_back(uint8_t(seg_len & 0xff));
    return pre;
  }

  static HandlerRegistry make_builtin() {
    HandlerRegistry reg;
    // Scope must include the (zeroed) checksum field itself; a patched scope
    // then sums to 0xffff, which is what verify checks.
    reg.add(
        "internet-checksum",
        [](const Bytes& frame, ByteRange scope, const HandlerContext&) {
          uint16_t c = internet_checksum(frame.data() + scope.begin,
                                         scope.size());
          return BitString::from_uint(c, 16);
        },
        [](const Bytes& frame, ByteRange scope, const HandlerContext&) {
          return ones_complement_sum(frame.data() + scope.begin,
                                     scope.size()) == 0xffff;
        });
    // Same sum with the transport pseudo header prepended. A computed value
    // of zero is sent as 0xffff, which leaves the verification sum intact.
    reg.add(
        "tcp-udp-pseudo-checksum",
        [](const Bytes& frame, ByteRange scope, const HandlerContext& ctx) {
          Bytes buf = pseudo_header(ctx, scope.size());
          buf.insert(buf.end(), frame.begin() + long(scope.begin),
                     frame.begin() + long(scope.end));
          uint16_t c = internet_checksum(buf);
          if (c == 0) c = 0xffff;
          return BitString::from_uint(c, 16);
        },
        [](const Bytes& frame, ByteRange scope, const HandlerContext& ctx) {
          Bytes buf = pseudo_header(ctx, scope.size());
          buf.insert(buf.end(), frame.begin() + long(scope.begin),
                     frame.begin() + long(scope.end));
          return ones_complement_sum(buf.data(), buf.size()) == 0xffff;
        });
    // Scope excludes the CRC field; verify compares against field_value.
    reg.add(
        "crc16-modbus",
        [](const Bytes& frame, ByteRange scope, const HandlerContext&) {
          uint16_t c = crc16_modbus(frame.data() + scope.begin, scope.size());
          return BitString::from_uint(c, 16);
        },
        [](const Bytes& frame, ByteRange scope, const HandlerContext& ctx) {
          uint16_t c = crc16_modbus(frame.data() + scope.begin, scope.size());
          return ctx.field_value.width() == 16 &&
                 ctx.field_value.to_uint() == c;
        });
    return reg;
  }

  std::map<std::string, Entry> entries_;
};

}  // namespace netweave
