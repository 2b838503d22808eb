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
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "netweave/binding.hpp"
#include "netweave/bitstring.hpp"
#include "netweave/connection.hpp"
#include "netweave/grammar.hpp"
#include "netweave/handlers.hpp"
#include "netweave/netconfig.hpp"

namespace netweave {

enum class ParseOutcome { kFull, kPartial, kUnknown };

inline const char* parse_outcome_name(ParseOutcome o) {
  switch (o) {
    case ParseOutcome::kFull: return "full";
    case ParseOutcome::kPartial: return "partial";
    case ParseOutcome::kUnknown: return "unknown";
  }
  return "?";
}

struct ParsedLayer {
  std::string proto;
  std::map<std::string, BitString> values;  // every fixed field, normalized
  // Byte offsets into the original frame.
  size_t begin = 0;
  size_t header_end = 0;
  size_t trailer_begin = 0;
  size_t end = 0;

  size_t body_size() const { return trailer_begin - header_end; }
};

struct ParsedFrame {
  ParseOutcome outcome = ParseOutcome::kUnknown;
  std::vector<ParsedLayer> layers;  // bottom-to-top, each one verified
  Bytes residual;                   // innermost bytes left undecoded
  Bytes original;

  const ParsedLayer* top() const {
    return layers.empty() ? nullptr : &layers.back();
  }

  // Rebuild the frame from decoded values plus the residual. Equal to
  // `original` byte for byte — the decode loses nothing.
  Bytes reencode(const GrammarSet& grammars) const {
    Bytes body = residual;
    for (size_t li = layers.size(); li-- > 0;) {
      const ParsedLayer& l = layers[li];
      const ProtocolGrammar& g = grammars.at(l.proto);
      Bytes buf(g.header_bytes() + body.size() + g.trailer_bytes(), 0);
      size_t bit_off = 0;
      for (const FieldSpec& f : g.fields) {
        if (f.variable) {
          std::copy(body.begin(), body.end(), buf.begin() + long(bit_off / 8));
          bit_off += body.size() * 8;
          continue;
        }
        BitString v = l.values.at(f.name);
        if (f.endian == Endian::kLittle) v = v.reversed_bytes();
        write_bits(buf, bit_off, v);
        bit_off += f.width;
      }
      body = std::move(buf);
    }
    return body;
  }
};

// One line of the extraction audit trail: which value won a key and on what
// evidence, stamped with a logical analysis sequence number.
struct AuditRecord {
  uint64_t analysis = 0;
  std::string key;
  std::string old_value;  // "-" when the key was unset
  std::string new_value;
  uint64_t votes = 0;
  uint64_t zeros_ignored = 0;
  std::string runner_up;  // "none" or "value xN"
  std::string sources;    // comma-joined proto.field list

  std::string line() const {
    std::ostringstream os;
    os << "analysis " << analysis << ": " << key << " " << old_value << " -> "
       << new_value << " votes " << votes << " runner-up " << runner_up
       << " zeros-ignored " << zeros_ignored << " via " << sources;
    return os.str();
  }
};

// Decodes target frames against the grammar universe, accumulates state-key
// evidence, and drives the connection machines. Parsing never trusts a
// frame: statics must match, lengths must agree, checksums must verify, and
// address-like fields must point at an identity we could plausibly hold.
class Extractor {
 public:
  Extractor(const GrammarSet* grammars, const HandlerRegistry* registry)
      : grammars_(grammars), registry_(registry) {}

  // Pure decode. conn may be null (no session context).
  ParsedFrame parse(const Bytes& frame, const NetworkConfiguration& cfg,
                    const ConnectionState* conn) const {
    ParsedFrame out;
    out.original = frame;
    std::vector<std::string> roots = grammars_->frame_level();
    std::sort(roots.begin(), roots.end());
    for (const auto& root : roots) {
      ParsedLayer layer;
      LayerStatus st = parse_layer(frame, 0, frame.size(), root, cfg, conn,
                                   nullptr, layer);
      if (st != LayerStatus::kOk) continue;
      out.layers.push_back(std::move(layer));
      descend(frame, cfg, conn, out);
      return out;
    }
    out.outcome = ParseOutcome::kUnknown;
    out.residual = frame;
    return out;
  }

  // Decode plus side effects: evidence harvesting, connection sequencing,
  // and retention of unknown frames for later re-analysis.
  ParsedFrame send_packet(const Bytes& frame, const NetworkConfiguration& cfg,
                          ConnectionState& conn) {
    ParsedFrame parsed = parse(frame, cfg, &conn);
    switch (parsed.outcome) {
      case ParseOutcome::kFull:
        ++full_count_;
        break;
      case ParseOutcome::kPartial:
        ++partial_count_;
        break;
      case ParseOutcome::kUnknown:
        ++unknown_count_;
        retain_unknown(frame);
        return parsed;
    }
    harvest(parsed);
    if (parsed.outcome == ParseOutcome::kFull) {
      std::vector<LayerView> views;
      views.reserve(parsed.layers.size());
      for (const auto& l : parsed.layers) {
        views.push_back({l.proto, &l.values, l.body_size()});
      }
      sequence_step(views, conn);
    }
    return parsed;
  }

  // Majority vote per state key over everything harvested so far. All-zero
  // evidence is never elected (it is how several protocols spell "address
  // not yet assigned"); ties break toward the most recently seen value.
  // Returns the number of keys whose value changed.
  size_t analyze_candidates(NetworkConfiguration& cfg) {
    ++analysis_seq_;
    size_t changed = 0;
    for (const auto& [key, votes] : candidates_) {
      const BitString* best = nullptr;
      const VoteStats* best_stats = nullptr;
      const BitString* second = nullptr;
      const VoteStats* second_stats = nullptr;
      uint64_t zeros = 0;
      for (const auto& [value, stats] : votes) {
        if (value.is_zero()) {
          zeros += stats.count;
          continue;
        }
        if (!best || stats.count > best_stats->count ||
            (stats.count == best_stats->count &&
             stats.last_seen > best_stats->last_seen)) {
          second = best;
          second_stats = best_stats;
          best = &value;
          best_stats = &stats;
        } else if (!second || stats.count > second_stats->count) {
          second = &value;
          second_stats = &stats;
        }
      }
      if (!best) continue;
      auto cur = cfg.values.find(key);
      if (cur != cfg.values.end() && cur->second == *best) continue;

      AuditRecord rec;
      rec.analysis = analysis_seq_;
      rec.key = key;
      rec.old_value = cur == cfg.values.end() ? "-" : cur->second.to_hex();
      rec.new_value = best->to_hex();
      rec.votes = best_stats->count;
      rec.zeros_ignored = zeros;
      if (second) {
        std::ostringstream os;
        os << second->to_hex() << " x" << second_stats->count;
        rec.runner_up = os.str();
      } else {
        rec.runner_up = "none";
      }
      std::string src;
      for (const auto& s : best_stats->sources) {
        if (!src.empty()) src += ',';
        src += s;
      }
      rec.sources = src;
      audit_.push_back(std::move(rec));
      cfg.values[key] = *best;
      ++changed;
    }
    return changed;
  }

  // Frames that matched nothing when first seen get another chance once the
  // configuration has learned more. Returns how many graduated.
  size_t reanalyze_unknowns(const NetworkConfiguration& cfg) {
    size_t graduated = 0;
    std::deque<Bytes> keep;
    for (const auto& frame : unknowns_) {
      ParsedFrame parsed = parse(frame, cfg, nullptr);
      if (parsed.outcome == ParseOutcome::kUnknown) {
        keep.push_back(frame);
        continue;
      }
      harvest(parsed);
      ++graduated;
    }
    unknowns_ = std::move(keep);
    return graduated;
  }

  const std::vector<AuditRecord>& audit() const { return audit_; }
  size_t unknown_retained() const { return unknowns_.size(); }
  uint64_t full_count() const { return full_count_; }
  uint64_t partial_count() const { return partial_count_; }
  uint64_t unknown_count() const { return unknown_count_; }

  // Raw vote table for one key: value -> occurrence count.
  std::map<BitString, uint64_t> votes_for(const std::string& key) const {
    std::map<BitString, uint64_t> out;
    auto it = candidates_.find(key);
    if (it == candidates_.end()) return out;
    for (const auto& [value, stats] : it->second) out[value] = stats.count;
    return out;
  }

  static constexpr size_t kUnknownRetention = 256;

 private:
  enum class LayerStatus { kOk, kStructural, kChecksum };

  struct VoteStats {
    uint64_t count = 0;
    uint64_t last_seen = 0;
    std::set<std::string> sources;
  };

  // Decode and verify one layer occupying [begin, end) of the frame.
  // `below` is the already-decoded enclosing layer (for checksum context),
  // null at frame level.
  LayerStatus parse_layer(const Bytes& frame, size_t begin, size_t end,
                          const std::string& proto,
                          const NetworkConfiguration& cfg,
                          const ConnectionState* conn,
                          const ParsedLayer* below, ParsedLayer& out) const {
    const ProtocolGrammar& g = grammars_->at(proto);
    size_t size = end - begin;
    if (size < g.min_bytes()) return LayerStatus::kStructural;
    if (!g.body().variable && size != g.min_bytes() + g.body().width / 8) {
      return LayerStatus::kStructural;
    }
    out.proto = proto;
    out.begin = begin;
    out.header_end = begin + g.header_bytes();
    out.trailer_begin = end - g.trailer_bytes();
    out.end = end;

    size_t bit_off = begin * 8;
    std::vector<std::pair<size_t, const FieldSpec*>> handlers;  // bit offsets
    for (const FieldSpec& f : g.fields) {
      if (f.variable) {
        bit_off += out.body_size() * 8;
        continue;
      }
      BitString v = read_bits(frame, bit_off, f.width);
      if (f.endian == Endian::kLittle) v = v.reversed_bytes();
      out.values[f.name] = v;

      switch (f.kind) {
        case FieldKind::kStatic:
          if (!(v == f.value)) return LayerStatus::kStructural;
          break;
        case FieldKind::kLength: {
          size_t span = 0;
          switch (f.length_scope) {
            case LengthScope::kHeader: span = g.header_bytes(); break;
            case LengthScope::kHeaderAndBody:
              span = g.header_bytes() + out.body_size();
              break;
            case LengthScope::kBody: span = out.body_size(); break;
          }
          uint64_t expect = f.unit == LengthUnit::kBits ? span * 8 : span;
          expect = uint64_t(int64_t(expect) + f.adjust);
          if (f.width < 64) expect &= (uint64_t(1) << f.width) - 1;
          if (v.to_uint() != expect) return LayerStatus::kStructural;
          break;
        }
        case FieldKind::kHandler:
          handlers.push_back({bit_off, &f});
          break;
        case FieldKind::kStateful:
          if (f.match && !value_plausible(v, f, cfg, conn)) {
            return LayerStatus::kStructural;
          }
          break;
        case FieldKind::kNextLayer:
        case FieldKind::kFuzzed:
          break;
      }
      bit_off += f.width;
    }

    // Checksums last, once the whole header decoded cleanly.
    for (const auto& [off, f] : handlers) {
      if (f->emit_zero) continue;
      HandlerContext ctx;
      if (below) fill_context(*below, ctx);
      ctx.field_value = out.values.at(f->name);
      ByteRange scope = layer_scope(out, *f, off / 8);
      if (!registry_->verify(f->handler, frame, scope, ctx)) {
        return LayerStatus::kChecksum;
      }
    }
    return LayerStatus::kOk;
  }

  // A match-flagged address field corroborates when it names an identity we
  // might answer to: the key's current binding, its peer's, or broadcast.
  bool value_plausible(const BitString& v, const FieldSpec& f,
                       const NetworkConfiguration& cfg,
                       const ConnectionState* conn) const {
    bool all_ones = true;
    for (size_t i = 0; i < v.width(); ++i) all_ones = all_ones && v.bit(i);
    if (all_ones) return true;
    if (auto b = key_binding(f.key, f.width, cfg, conn); b && *b == v) {
      return true;
    }
    if (!f.peer.empty()) {
      if (auto p = key_binding(f.peer, f.width, cfg, conn); p && *p == v) {
        return true;
      }
    }
    return false;
  }

  static void fill_context(const ParsedLayer& below, HandlerContext& ctx) {
    auto grab = [&](const char* name) -> BitString {
      auto it = below.values.find(name);
      return it == below.values.end() ? BitString() : it->second;
    };
    ctx.src_addr = grab("src-ip");
    ctx.dst_addr = grab("dst-ip");
    BitString proto = grab("protocol");
    if (proto.width() > 0 && proto.width() <= 64) {
      ctx.protocol = uint8_t(proto.to_uint());
    }
  }

  static ByteRange layer_scope(const ParsedLayer& l, const FieldSpec& f,
                               size_t field_byte) {
    switch (f.handler_scope) {
      case HandlerScope::kHeader: return {l.begin, l.header_end};
      case HandlerScope::kHeaderAndBody: return {l.begin, l.trailer_begin};
      case HandlerScope::kBody: return {l.header_end, l.trailer_begin};
      case HandlerScope::kPreceding: return {l.begin, field_byte};
    }
    return {0, 0};
  }

  // Walk upward from the outermost decoded layer. Structural misfits fall
  // back to treating the body as payload; a checksum misfit taints the
  // descent and the result is only partial.
  void descend(const Bytes& frame, const NetworkConfiguration& cfg,
               const ConnectionState* conn, ParsedFrame& out) const {
    out.outcome = ParseOutcome::kFull;
    for (;;) {
      const ParsedLayer& cur = out.layers.back();
      if (cur.body_size() == 0) {
        out.residual.clear();
        return;
      }
      std::vector<std::string> kids = candidate_children(cur);
      bool advanced = false;
      for (const auto& kid : kids) {
        ParsedLayer next;
        LayerStatus st = parse_layer(frame, cur.header_end, cur.trailer_begin,
                                     kid, cfg, conn, &cur, next);
        if (st == LayerStatus::kOk) {
          out.layers.push_back(std::move(next));
          advanced = true;
          break;
        }
        if (st == LayerStatus::kChecksum) {
          out.outcome = ParseOutcome::kPartial;
          out.residual = slice(frame, cur.header_end, cur.trailer_begin);
          return;
        }
      }
      if (!advanced) {
        out.residual = slice(frame, cur.header_end, cur.trailer_begin);
        return;
      }
    }
  }

  // Children whose every next-layer selector in `cur` matches the decoded
  // value. Sorted for a deterministic tie-break.
  std::vector<std::string> candidate_children(const ParsedLayer& cur) const {
    std::vector<std::string> out;
    const ProtocolGrammar& g = grammars_->at(cur.proto);
    for (const auto& kid : grammars_->children(cur.proto)) {
      bool ok = true;
      for (const FieldSpec& f : g.fields) {
        if (f.kind != FieldKind::kNextLayer) continue;
        const std::vector<BitString>* list = nullptr;
        for (const auto& [proto, vals] : f.mapping) {
          if (proto == kid) list = &vals;
        }
        const BitString& have = cur.values.at(f.name);
        bool member = false;
        if (list) {
          for (const auto& v : *list) member = member || v == have;
        }
        if (!member) {
          ok = false;
          break;
        }
      }
      if (ok) out.push_back(kid);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  void harvest(const ParsedFrame& parsed) {
    ++clock_;
    for (const auto& l : parsed.layers) {
      const ProtocolGrammar& g = grammars_->at(l.proto);
      for (const FieldSpec& f : g.fields) {
        if (f.kind != FieldKind::kStateful || f.harvest.empty()) continue;
        VoteStats& s = candidates_[f.harvest][l.values.at(f.name)];
        ++s.count;
        s.last_seen = clock_;
        s.sources.insert(l.proto + "." + f.name);
      }
    }
  }

  void retain_unknown(const Bytes& frame) {
    unknowns_.push_back(frame);
    if (unknowns_.size() > kUnknownRetention) unknowns_.pop_front();
  }

  static Bytes slice(const Bytes& b, size_t begin, size_t end) {
    return Bytes(b.begin() + long(begin), b.begin() + long(end));
  }

  const GrammarSet* grammars_;
  const HandlerRegistry* registry_;
  std::map<std::string, std::map<BitString, VoteStats>> candidates_;
  std::deque<Bytes> unknowns_;
  std::vector<AuditRecord> audit_;
  uint64_t clock_ = 0;
  uint64_t analysis_seq_ = 0;
  uint64_t full_count_ = 0;
  uint64_t partial_count_ = 0;
  uint64_t unknown_count_ = 0;
};

}  // namespace netweave
