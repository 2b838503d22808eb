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
#include <set>
#include <string>
#include <vector>

#include "netweave/bitstring.hpp"
#include "netweave/grammar.hpp"

namespace netweave {

enum class PlanRole { kHandshake, kFuzz, kRaw };

inline const char* plan_role_name(PlanRole r) {
  switch (r) {
    case PlanRole::kHandshake: return "handshake";
    case PlanRole::kFuzz: return "fuzz";
    case PlanRole::kRaw: return "raw";
  }
  return "?";
}

// One entry of the packet-list. `chain` is bottom-to-top (frame level first)
// and empty for the raw plan.
struct PacketPlan {
  PlanRole role = PlanRole::kRaw;
  std::vector<std::string> chain;
  int fault_budget = 0;

  bool operator==(const PacketPlan&) const = default;
};

// Protocols that get a connection state machine (and therefore a handshake
// plan once their chain is accepted). See connection.hpp for the machines.
inline const std::set<std::string>& stateful_protocols() {
  static const std::set<std::string> s = {"arp", "dhcp", "tcp"};
  return s;
}

// What the engine currently believes about the target: the accepted protocol
// tree, extracted values, and the packet-list derived from both. Starts
// knowing nothing — the tree holds only the raw-frame pseudo-node and the
// packet-list is a single raw plan.
class NetworkConfiguration {
 public:
  using Chain = std::vector<std::string>;

  // Extracted target state, keyed by the grammar's state keys. Written by
  // the extractor's analysis pass, read during assembly.
  std::map<std::string, BitString> values;

  NetworkConfiguration() = default;
  explicit NetworkConfiguration(const GrammarSet* grammars,
                                bool handshakes = true)
      : grammars_(grammars), handshakes_(handshakes) {}

  const GrammarSet& grammars() const { return *grammars_; }
  bool handshakes() const { return handshakes_; }
  void set_handshakes(bool on) { handshakes_ = on; }

  bool accepted(const Chain& chain) const {
    return std::find(tree_.begin(), tree_.end(), chain) != tree_.end();
  }

  // Returns false when the chain was already present.
  bool accept(const Chain& chain) {
    if (accepted(chain)) return false;
    tree_.push_back(chain);
    std::sort(tree_.begin(), tree_.end());
    return true;
  }

  const std::vector<Chain>& tree() const { return tree_; }

  // Text form, one chain per line; the raw-frame pseudo-node is always first.
  std::vector<std::string> tree_lines() const {
    std::vector<std::string> out = {"raw-frame"};
    for (const auto& c : tree_) out.push_back(join(c));
    return out;
  }

  // Candidate chains one step beyond the accepted tree: unaccepted
  // frame-level roots, plus every accepted chain extended by a protocol
  // whose lower link ends at the chain's top and whose presence every
  // next-layer field of that top can select. Sorted, deduplicated.
  std::vector<Chain> frontier() const {
    std::set<Chain> out;
    for (const auto& root : grammars_->frame_level()) {
      Chain c = {root};
      if (!accepted(c)) out.insert(c);
    }
    for (const auto& base : tree_) {
      const ProtocolGrammar& top = grammars_->at(base.back());
      for (const auto& child : grammars_->children(base.back())) {
        bool mapped = true;
        for (const auto& f : top.fields) {
          if (f.kind != FieldKind::kNextLayer) continue;
          bool has = false;
          for (const auto& [proto, vals] : f.mapping) has = has || proto == child;
          if (!has) {
            mapped = false;
            break;
          }
        }
        if (!mapped) continue;
        Chain ext = base;
        ext.push_back(child);
        if (!accepted(ext)) out.insert(ext);
      }
    }
    return {out.begin(), out.end()};
  }

  // Packet-list for one execution, in emission order: handshake plans for
  // accepted stateful chains, fuzz plans for every accepted chain, and the
  // raw plan last so leftover input still reaches the target unframed.
  std::vector<PacketPlan> plans(int fault_budget = 0) const {
    std::vector<PacketPlan> out;
    if (handshakes_) {
      for (const auto& c : tree_) {
        if (stateful_protocols().count(c.back())) {
          out.push_back({PlanRole::kHandshake, c, 0});
        }
      }
    }
    for (const auto& c : tree_) {
      out.push_back({PlanRole::kFuzz, c, fault_budget});
    }
    out.push_back({PlanRole::kRaw, {}, 0});
    return out;
  }

  // Assembly-time default for a state key with no extracted value: the first
  // field default declared for that key, scanning grammars and fields in a
  // fixed order so the answer is stable. All-zero defaults are the loader's
  // stand-in for "nothing declared" and don't count as an opinion.
  std::optional<BitString> default_for_key(const std::string& key) const {
    for (const auto& name : grammars_->names()) {
      for (const auto& f : grammars_->at(name).fields) {
        if (f.kind == FieldKind::kStateful && f.key == key &&
            !f.default_value.empty() && !f.default_value.is_zero()) {
          return f.default_value;
        }
      }
    }
    return std::nullopt;
  }

  // Extracted value if present, else the grammar default.
  std::optional<BitString> lookup(const std::string& key) const {
    auto it = values.find(key);
    if (it != values.end()) return it->second;
    return default_for_key(key);
  }

  static std::string join(const Chain& c) {
    std::string s;
    for (size_t i = 0; i < c.size(); ++i) {
      if (i) s += ' ';
      s += c[i];
    }
    return s;
  }

 private:
  const GrammarSet* grammars_ = nullptr;
  std::vector<Chain> tree_;
  bool handshakes_ = true;
};

}  // namespace netweave
