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

#include <map>
#include <optional>
#include <string>

#include "netweave/bitstring.hpp"
#include "netweave/connection.hpp"
#include "netweave/grammar.hpp"
#include "netweave/netconfig.hpp"

namespace netweave {

// Most-recent-knowledge-wins resolution for a state key: per-message
// overrides beat the live connection, which beats campaign-level extracted
// values, which beat grammar defaults. Sources whose stored width disagrees
// with the requested one are skipped rather than truncated.
inline std::optional<BitString> key_binding(
    const std::string& key, size_t width, const NetworkConfiguration& cfg,
    const ConnectionState* conn,
    const std::map<std::string, BitString>* extra = nullptr) {
  if (key.empty()) return std::nullopt;
  if (extra) {
    auto it = extra->find(key);
    if (it != extra->end() && it->second.width() == width) return it->second;
  }
  if (conn) {
    auto it = conn->overrides.find(key);
    if (it != conn->overrides.end() && it->second.width() == width) {
      return it->second;
    }
  }
  auto it = cfg.values.find(key);
  if (it != cfg.values.end() && it->second.width() == width) return it->second;
  if (auto d = cfg.default_for_key(key); d && d->width() == width) return d;
  return std::nullopt;
}

// Value a Stateful field assembles to. Same chain as key_binding, except the
// field's own declared default slots in ahead of other fields' defaults for
// the same key.
inline BitString field_binding(
    const FieldSpec& f, const NetworkConfiguration& cfg,
    const ConnectionState* conn,
    const std::map<std::string, BitString>* extra = nullptr) {
  if (extra) {
    auto it = extra->find(f.key);
    if (it != extra->end() && it->second.width() == f.width) return it->second;
  }
  if (conn) {
    auto it = conn->overrides.find(f.key);
    if (it != conn->overrides.end() && it->second.width() == f.width) {
      return it->second;
    }
  }
  auto it = cfg.values.find(f.key);
  if (it != cfg.values.end() && it->second.width() == f.width) {
    return it->second;
  }
  if (!f.default_value.empty()) return f.default_value;
  if (auto d = cfg.default_for_key(f.key); d && d->width() == f.width) {
    return *d;
  }
  return BitString::zeros(f.width);
}

}  // namespace netweave
