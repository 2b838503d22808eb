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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "netweave/binding.hpp"
#include "netweave/bitstring.hpp"
#include "netweave/connection.hpp"
#include "netweave/errors.hpp"
#include "netweave/fuzz_stream.hpp"
#include "netweave/grammar.hpp"
#include "netweave/handlers.hpp"
#include "netweave/netconfig.hpp"

namespace netweave {

// Where layer i of an assembled frame sits. header/trailer bounds are byte
// offsets into the frame; the layer's body is [header_end, trailer_begin).
struct LayerLoc {
  size_t begin = 0;
  size_t header_end = 0;
  size_t trailer_begin = 0;
  size_t end = 0;
};

struct AssembledPacket {
  Bytes frame;
  std::vector<std::string> chain;  // the plan's chain, bottom-to-top
  size_t depth = 0;                // layers actually assembled (0 = raw)
  std::vector<LayerLoc> locs;      // one per assembled layer

  // Fuzz bytes this packet consumed, by bucket. field + body covers every
  // grammar-driven byte; control covers depth/length/fault selectors.
  size_t control_bytes = 0;
  size_t field_bytes = 0;
  size_t body_bytes = 0;
};

namespace detail {

inline size_t field_byte_offset(const ProtocolGrammar& g, const LayerLoc& loc,
                                size_t idx) {
  size_t body = loc.trailer_begin - loc.header_end;
  return loc.begin + g.field_bit_offset(idx, body) / 8;
}

inline void write_field(Bytes& frame, size_t byte_off, const FieldSpec& f,
                        const BitString& v) {
  if (f.endian == Endian::kLittle) {
    write_bits(frame, byte_off * 8, v.reversed_bytes());
  } else {
    write_bits(frame, byte_off * 8, v);
  }
}

inline BitString read_field(const Bytes& frame, size_t byte_off,
                            const FieldSpec& f) {
  BitString v = read_bits(frame, byte_off * 8, f.width);
  return f.endian == Endian::kLittle ? v.reversed_bytes() : v;
}

// Pseudo-header inputs for transport checksums come from the enclosing
// layer's src-ip/dst-ip/protocol fields, read back out of the frame. Layers
// without those fields contribute an empty context.
inline HandlerContext handler_context(const Bytes& frame,
                                      const GrammarSet& grammars,
                                      const std::vector<std::string>& chain,
                                      const std::vector<LayerLoc>& locs,
                                      size_t layer) {
  HandlerContext ctx;
  if (layer == 0) return ctx;
  const ProtocolGrammar& below = grammars.at(chain[layer - 1]);
  const LayerLoc& loc = locs[layer - 1];
  for (size_t i = 0; i < below.fields.size(); ++i) {
    const FieldSpec& f = below.fields[i];
    if (f.variable) continue;
    if (f.name != "src-ip" && f.name != "dst-ip" && f.name != "protocol") {
      continue;
    }
    BitString v = read_field(frame, field_byte_offset(below, loc, i), f);
    if (f.name == "src-ip") ctx.src_addr = v;
    if (f.name == "dst-ip") ctx.dst_addr = v;
    if (f.name == "protocol") ctx.protocol = uint8_t(v.to_uint());
  }
  return ctx;
}

inline ByteRange handler_scope_range(const ProtocolGrammar& g,
                                     const LayerLoc& loc, size_t field_idx,
                                     const FieldSpec& f) {
  switch (f.handler_scope) {
    case HandlerScope::kHeader:
      return {loc.begin, loc.header_end};
    case HandlerScope::kHeaderAndBody:
      return {loc.begin, loc.trailer_begin};
    case HandlerScope::kBody:
      return {loc.header_end, loc.trailer_begin};
    case HandlerScope::kPreceding:
      return {loc.begin, field_byte_offset(g, loc, field_idx)};
  }
  return {0, 0};
}

}  // namespace detail

// Rewrite every Handler field of `pkt` from the frame's current bytes:
// zero the field, compute over its scope, write the result. Top layer first
// so an outer checksum would see finished inner bytes. emit: zero fields
// stay zero and cost no handler call.
inline void patch_handlers(AssembledPacket& pkt, const GrammarSet& grammars,
                           const HandlerRegistry& registry) {
  for (size_t li = pkt.depth; li-- > 0;) {
    const ProtocolGrammar& g = grammars.at(pkt.chain[li]);
    const LayerLoc& loc = pkt.locs[li];
    for (size_t i = 0; i < g.fields.size(); ++i) {
      const FieldSpec& f = g.fields[i];
      if (f.kind != FieldKind::kHandler) continue;
      size_t off = detail::field_byte_offset(g, loc, i);
      detail::write_field(pkt.frame, off, f, BitString::zeros(f.width));
      if (f.emit_zero) continue;
      HandlerContext ctx = detail::handler_context(pkt.frame, grammars,
                                                   pkt.chain, pkt.locs, li);
      ByteRange scope = detail::handler_scope_range(g, loc, i, f);
      BitString v = registry.compute(f.handler, pkt.frame, scope, ctx);
      detail::write_field(pkt.frame, off, f, v);
    }
  }
}

// Build one frame for `chain` assembled to `depth` layers. Construction is
// top-down (innermost layer first, each wrapping the previous), followed by
// a bottom-up patch pass: length fields first (sizes are now final), then
// handler fields (bytes are now final). Stateful fields take their binding
// at construction time; nothing later changes them.
//
// depth 0 is a raw packet: one length selector byte, then that many fuzz
// bytes verbatim.
inline AssembledPacket assemble(
    const std::vector<std::string>& chain, size_t depth,
    const NetworkConfiguration& cfg, const ConnectionState* conn,
    FuzzStream& fuzz, const HandlerRegistry& registry,
    const std::map<std::string, BitString>* extra = nullptr) {
  const GrammarSet& grammars = cfg.grammars();
  AssembledPacket pkt;
  pkt.chain = chain;
  pkt.depth = depth;
  size_t c0 = fuzz.control_consumed();
  size_t f0 = fuzz.field_consumed();
  size_t b0 = fuzz.body_consumed();

  if (depth == 0) {
    size_t want = fuzz.control_byte();
    pkt.frame = fuzz.body_bytes(want);
  } else {
    size_t body_want = fuzz.control_byte();
    Bytes cur = fuzz.body_bytes(body_want);

    for (size_t li = depth; li-- > 0;) {
      const ProtocolGrammar& g = grammars.at(chain[li]);
      Bytes buf(g.header_bytes() + cur.size() + g.trailer_bytes(), 0);
      size_t bit_off = 0;
      for (const FieldSpec& f : g.fields) {
        if (f.variable) {
          std::copy(cur.begin(), cur.end(), buf.begin() + long(bit_off / 8));
          bit_off += cur.size() * 8;
          continue;
        }
        BitString v;
        switch (f.kind) {
          case FieldKind::kStatic:
            v = f.value;
            break;
          case FieldKind::kFuzzed:
            v = fuzz.field_bits(f.width);
            break;
          case FieldKind::kStateful:
            v = field_binding(f, cfg, conn, extra);
            break;
          case FieldKind::kNextLayer: {
            const std::vector<BitString>* vals = nullptr;
            if (li + 1 < depth) {
              for (const auto& [proto, list] : f.mapping) {
                if (proto == chain[li + 1]) vals = &list;
              }
            }
            // No upper layer assembled: the selector is free input.
            v = vals ? vals->front() : fuzz.field_bits(f.width);
            break;
          }
          case FieldKind::kLength:
          case FieldKind::kHandler:
            v = BitString::zeros(f.width);  // patched below
            break;
        }
        if (f.endian == Endian::kLittle) {
          write_bits(buf, bit_off, v.reversed_bytes());
        } else {
          write_bits(buf, bit_off, v);
        }
        bit_off += f.width;
      }
      cur = std::move(buf);
    }
    pkt.frame = std::move(cur);

    pkt.locs.resize(depth);
    for (size_t li = 0; li < depth; ++li) {
      const ProtocolGrammar& g = grammars.at(chain[li]);
      size_t begin = li == 0 ? 0 : pkt.locs[li - 1].header_end;
      size_t end = li == 0 ? pkt.frame.size() : pkt.locs[li - 1].trailer_begin;
      pkt.locs[li] = {begin, begin + g.header_bytes(), end - g.trailer_bytes(),
                      end};
    }

    // Patch pass, stage one: lengths.
    for (size_t li = 0; li < depth; ++li) {
      const ProtocolGrammar& g = grammars.at(chain[li]);
      const LayerLoc& loc = pkt.locs[li];
      for (size_t i = 0; i < g.fields.size(); ++i) {
        const FieldSpec& f = g.fields[i];
        if (f.kind != FieldKind::kLength) continue;
        size_t span = 0;
        switch (f.length_scope) {
          case LengthScope::kHeader: span = loc.header_end - loc.begin; break;
          case LengthScope::kHeaderAndBody:
            span = loc.trailer_begin - loc.begin;
            break;
          case LengthScope::kBody:
            span = loc.trailer_begin - loc.header_end;
            break;
        }
        uint64_t value = f.unit == LengthUnit::kBits ? span * 8 : span;
        value = uint64_t(int64_t(value) + f.adjust);
        if (f.width < 64) value &= (uint64_t(1) << f.width) - 1;
        detail::write_field(pkt.frame, detail::field_byte_offset(g, loc, i), f,
                            BitString::from_uint(value, f.width));
      }
    }

    // Stage two: handlers, now that every covered byte is final.
    patch_handlers(pkt, grammars, registry);
  }

  pkt.control_bytes = fuzz.control_consumed() - c0;
  pkt.field_bytes = fuzz.field_consumed() - f0;
  pkt.body_bytes = fuzz.body_consumed() - b0;
  return pkt;
}

// Corrupt up to `budget` fixed fields of an already-patched packet. Each
// mutation spends one selector byte s — field index from the high bits,
// low bit set means the damage is left visible (handlers not re-patched) —
// plus replacement bits for the chosen field. Runs dry silently: a packet
// mutated fewer times than budgeted is still a packet.
inline void inject_fault(AssembledPacket& pkt, int budget,
                         const NetworkConfiguration& cfg, FuzzStream& fuzz,
                         const HandlerRegistry& registry) {
  if (pkt.depth == 0 || budget <= 0) return;
  const GrammarSet& grammars = cfg.grammars();
  struct Slot {
    size_t layer;
    size_t field;
  };
  std::vector<Slot> slots;
  for (size_t li = 0; li < pkt.depth; ++li) {
    const ProtocolGrammar& g = grammars.at(pkt.chain[li]);
    for (size_t i = 0; i < g.fields.size(); ++i) {
      if (!g.fields[i].variable) slots.push_back({li, i});
    }
  }
  if (slots.empty()) return;

  size_t c0 = fuzz.control_consumed();
  size_t f0 = fuzz.field_consumed();
  for (int k = 0; k < budget; ++k) {
    uint8_t sel;
    try {
      sel = fuzz.control_byte();
    } catch (const FuzzExhausted&) {
      break;
    }
    const Slot& s = slots[(sel >> 1) % slots.size()];
    const ProtocolGrammar& g = grammars.at(pkt.chain[s.layer]);
    const FieldSpec& f = g.fields[s.field];
    BitString v = fuzz.field_bits(f.width);
    detail::write_field(
        pkt.frame, detail::field_byte_offset(g, pkt.locs[s.layer], s.field), f,
        v);
    if (!(sel & 1)) patch_handlers(pkt, grammars, registry);
  }
  pkt.control_bytes += fuzz.control_consumed() - c0;
  pkt.field_bytes += fuzz.field_consumed() - f0;
}

// Walks one execution's packet-list, one frame per call. Handshake plans
// emit owed replies until their protocol goes quiet (bounded, so two
// confused machines cannot ping-pong forever); fuzz plans emit exactly one
// grammar-framed packet; the raw plan flushes whatever input is left.
// Returns nothing when the execution is over.
class Encapsulator {
 public:
  explicit Encapsulator(const HandlerRegistry* registry)
      : registry_(registry) {}

  void begin_execution(const NetworkConfiguration& cfg, Bytes input,
                       int fault_budget) {
    plans_ = cfg.plans(fault_budget);
    plan_idx_ = 0;
    handshake_emitted_ = 0;
    fuzz_ = FuzzStream(std::move(input));
    last_ = AssembledPacket{};
  }

  // Same packet-list, no fuzz input: every fuzz plan assembles its full
  // chain with zeroed free bits, the raw plan is empty. This is the
  // deterministic baseline the prober replays before attributing coverage.
  void begin_replay(const NetworkConfiguration& cfg) {
    plans_ = cfg.plans(0);
    plan_idx_ = 0;
    handshake_emitted_ = 0;
    fuzz_ = FuzzStream::zeroes();
    last_ = AssembledPacket{};
  }

  std::optional<Bytes> get_packet(const NetworkConfiguration& cfg,
                                  ConnectionState& conn) {
    while (plan_idx_ < plans_.size()) {
      const PacketPlan& plan = plans_[plan_idx_];
      switch (plan.role) {
        case PlanRole::kHandshake: {
          if (handshake_emitted_ < kHandshakeDrainLimit) {
            if (auto act = next_handshake_action(plan.chain.back(), conn)) {
              ++handshake_emitted_;
              FuzzStream zero = FuzzStream::zeroes();
              last_ = assemble(plan.chain, plan.chain.size(), cfg, &conn, zero,
                               *registry_, &act->bindings);
              return last_.frame;  // stay on this plan: more may be owed
            }
          }
          ++plan_idx_;
          handshake_emitted_ = 0;
          break;
        }
        case PlanRole::kFuzz: {
          ++plan_idx_;
          // Control bytes are the only reads that can run dry loudly; when
          // one does, the execution is over and the partial packet is
          // dropped on the floor.
          try {
            // A zeroed stream would always select depth 0 (no frame at
            // all); replay wants the opposite — the whole chain, header
            // bytes only.
            size_t depth = fuzz_.zeroed()
                               ? plan.chain.size()
                               : fuzz_.control_byte() % (plan.chain.size() + 1);
            AssembledPacket pkt =
                assemble(plan.chain, depth, cfg, &conn, fuzz_, *registry_);
            if (!fuzz_.zeroed()) pkt.control_bytes += 1;  // the depth selector
            if (plan.fault_budget > 0 && depth > 0) {
              inject_fault(pkt, plan.fault_budget, cfg, fuzz_, *registry_);
            }
            if (pkt.frame.empty()) break;  // depth 0 selecting zero bytes
            last_ = std::move(pkt);
            return last_.frame;
          } catch (const FuzzExhausted&) {
            plan_idx_ = plans_.size();
            return std::nullopt;
          }
        }
        case PlanRole::kRaw: {
          ++plan_idx_;
          Bytes rest = fuzz_.rest();
          if (rest.empty()) break;
          last_ = AssembledPacket{};
          last_.body_bytes = rest.size();
          last_.frame = std::move(rest);
          return last_.frame;
        }
      }
    }
    return std::nullopt;
  }

  // Layout and consumption bookkeeping of the most recent frame.
  const AssembledPacket& last_packet() const { return last_; }
  const FuzzStream& stream() const { return fuzz_; }

  static constexpr size_t kHandshakeDrainLimit = 8;

 private:
  const HandlerRegistry* registry_;
  std::vector<PacketPlan> plans_;
  size_t plan_idx_ = 0;
  size_t handshake_emitted_ = 0;
  FuzzStream fuzz_;
  AssembledPacket last_;
};

}  // namespace netweave
