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

// Protocol grammars: the declarative layer descriptions everything else is
// driven by. One YAML document per protocol. Schema:
//
//   name: udp
//   fields:
//     - name: src-port          # unique within the grammar
//       width: 16               # bits, 1..4096, or the word `variable`
//       kind: next-layer        # static|length|next-layer|handler|stateful|fuzzed
//       ...kind-specific keys (see FieldSpec)...
//   body: payload              # exactly one field carries payload/next layer
//   lower: [ipv4]              # canonical encapsulation path fragment,
//                              # bottom-to-top; empty/absent = frame level
//
// Kind-specific keys:
//   static:     value: <literal>
//   length:     scope: header|header+body|body   unit: bytes|bits   adjust: N
//   next-layer: map: {dhcp: 68} or {dhcp: [68, 67]}  (first entry is the
//               value used when assembling; parse descent accepts any entry,
//               which tolerates the flipped port order of peer-sent traffic)
//   handler:    handler: <registry name>  scope: header|header+body|body|preceding
//               emit: real|zero   (zero skips patching; default real)
//   stateful:   key: <binding name>   harvest: <candidate key, optional>
//               default: <literal, optional; zeros otherwise>
//               match: true|false  (parse-time corroboration, default false)
//               peer: <binding name, optional>  (second binding a match field
//               accepts; traffic in the two directions carries the two ends'
//               values in the same positions)
//   fuzzed:     no extra keys
//
// Value literals: decimal, 0x hex, 0b binary, dotted quad, colon hex bytes.
// Plain 0 means all-zero at any width. endian: big|little is accepted on any
// whole-byte field wider than one byte (default big).

#pragma once

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "netweave/bitstring.hpp"
#include "netweave/errors.hpp"
#include "netweave/handlers.hpp"

namespace netweave {

enum class FieldKind { kStatic, kLength, kNextLayer, kHandler, kStateful, kFuzzed };
enum class Endian { kBig, kLittle };
enum class LengthScope { kHeader, kHeaderAndBody, kBody };
enum class HandlerScope { kHeader, kHeaderAndBody, kBody, kPreceding };
enum class LengthUnit { kBytes, kBits };

struct FieldSpec {
  std::string name;
  size_t width = 0;  // meaningful when !variable
  bool variable = false;
  FieldKind kind = FieldKind::kFuzzed;
  Endian endian = Endian::kBig;

  // static
  BitString value;
  // length
  LengthScope length_scope = LengthScope::kHeaderAndBody;
  LengthUnit unit = LengthUnit::kBytes;
  int64_t adjust = 0;
  // next-layer, sorted by protocol name
  std::vector<std::pair<std::string, std::vector<BitString>>> mapping;
  // handler
  std::string handler;
  HandlerScope handler_scope = HandlerScope::kHeaderAndBody;
  bool emit_zero = false;
  // stateful
  std::string key;
  std::string harvest;
  std::string peer;
  BitString default_value;
  bool match = false;

  bool operator==(const FieldSpec&) const = default;
};

struct ProtocolGrammar {
  std::string name;
  std::vector<FieldSpec> fields;
  std::string body_field;
  std::vector<std::string> lower;

  // Derived at load time.
  size_t body_index = 0;
  size_t header_prefix_bits = 0;  // fixed fields before the body
  size_t trailer_bits = 0;        // fixed fields after the body

  bool frame_level() const { return lower.empty(); }
  size_t header_bytes() const { return header_prefix_bits / 8; }
  size_t trailer_bytes() const { return trailer_bits / 8; }
  size_t min_bytes() const { return header_bytes() + trailer_bytes(); }
  const FieldSpec& body() const { return fields[body_index]; }

  // Bit offset of fields[idx] from layer start, given the body size.
  size_t field_bit_offset(size_t idx, size_t body_bytes) const {
    size_t off = 0;
    for (size_t i = 0; i < idx; ++i) {
      off += (i == body_index) ? body_bytes * 8 : fields[i].width;
    }
    return off;
  }

  const FieldSpec* find(const std::string& field_name) const {
    for (const auto& f : fields) {
      if (f.name == field_name) return &f;
    }
    return nullptr;
  }

  bool operator==(const ProtocolGrammar& o) const {
    return name == o.name && fields == o.fields && body_field == o.body_field &&
           lower == o.lower;
  }
};

namespace detail {

inline FieldKind parse_kind(const std::string& s, const std::string& field) {
  if (s == "static") return FieldKind::kStatic;
  if (s == "length") return FieldKind::kLength;
  if (s == "next-layer") return FieldKind::kNextLayer;
  if (s == "handler") return FieldKind::kHandler;
  if (s == "stateful") return FieldKind::kStateful;
  if (s == "fuzzed") return FieldKind::kFuzzed;
  throw ValidationError(field, "unknown field kind: " + s);
}

inline const char* kind_name(FieldKind k) {
  switch (k) {
    case FieldKind::kStatic: return "static";
    case FieldKind::kLength: return "length";
    case FieldKind::kNextLayer: return "next-layer";
    case FieldKind::kHandler: return "handler";
    case FieldKind::kStateful: return "stateful";
    case FieldKind::kFuzzed: return "fuzzed";
  }
  return "?";
}

inline std::string scalar(const YAML::Node& n, const std::string& what) {
  if (!n || !n.IsScalar()) throw SchemaError("expected scalar for " + what);
  return n.as<std::string>();
}

// A zero literal fits any width; everything else goes through the width-
// checked literal parser.
inline BitString value_literal(const std::string& text, size_t width,
                               const std::string& field) {
  if (text == "0") return BitString::zeros(width);
  try {
    return parse_value_literal(text, width);
  } catch (const Error& e) {
    throw ValidationError(field, e.what());
  }
}

inline std::string render_literal(const BitString& v) {
  if (v.is_zero()) return "0";
  if (v.width() > 64) {
    // Only whole-byte wide literals reach here (the loader accepts nothing
    // else above 64 bits); render as colon-separated hex bytes.
    std::string hex = v.to_hex();
    std::string out;
    for (size_t i = 0; i < hex.size(); i += 2) {
      if (i) out.push_back(':');
      out += hex.substr(i, 2);
    }
    return out;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "0x%llx",
                static_cast<unsigned long long>(v.to_uint()));
  return buf;
}

}  // namespace detail

inline ProtocolGrammar load_grammar(const std::string& text,
                                    const HandlerRegistry& registry) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw SchemaError(std::string("grammar document: ") + e.what());
  }
  if (!root.IsMap() || !root["name"] || !root["fields"] || !root["body"]) {
    throw SchemaError("grammar document needs name, fields and body keys");
  }

  ProtocolGrammar g;
  g.name = detail::scalar(root["name"], "name");
  g.body_field = detail::scalar(root["body"], "body");
  if (root["lower"]) {
    if (!root["lower"].IsSequence()) throw SchemaError("lower must be a list");
    for (const auto& item : root["lower"]) {
      g.lower.push_back(detail::scalar(item, "lower entry"));
    }
  }

  if (!root["fields"].IsSequence() || root["fields"].size() == 0) {
    throw SchemaError("fields must be a non-empty list");
  }

  std::set<std::string> seen;
  for (const auto& node : root["fields"]) {
    if (!node.IsMap()) throw SchemaError("field entries must be maps");
    FieldSpec f;
    f.name = detail::scalar(node["name"], "field name");
    if (!seen.insert(f.name).second) {
      throw ValidationError(f.name, "duplicate field name: " + f.name);
    }

    std::string width_text = detail::scalar(node["width"], "width of " + f.name);
    if (width_text == "variable") {
      f.variable = true;
    } else {
      uint64_t w;
      if (!detail::parse_uint_literal(width_text, w) || w < 1 || w > 4096) {
        throw ValidationError(f.name, "width must be 1..4096 bits or variable");
      }
      f.width = size_t(w);
    }

    f.kind = detail::parse_kind(detail::scalar(node["kind"], "kind of " + f.name),
                                f.name);

    if (node["endian"]) {
      std::string e = detail::scalar(node["endian"], "endian of " + f.name);
      if (e == "little") {
        f.endian = Endian::kLittle;
      } else if (e != "big") {
        throw ValidationError(f.name, "endian must be big or little");
      }
      if (f.endian == Endian::kLittle &&
          (f.variable || f.width % 8 != 0 || f.width <= 8)) {
        throw ValidationError(
            f.name, "endianness applies only to whole-byte fields wider than one byte");
      }
    }

    switch (f.kind) {
      case FieldKind::kStatic: {
        if (f.variable) throw ValidationError(f.name, "static fields need a width");
        f.value = detail::value_literal(
            detail::scalar(node["value"], "value of " + f.name), f.width, f.name);
        break;
      }
      case FieldKind::kLength: {
        if (f.variable || f.width > 64) {
          throw ValidationError(f.name, "length fields need a width of at most 64");
        }
        std::string sc = detail::scalar(node["scope"], "scope of " + f.name);
        if (sc == "header") f.length_scope = LengthScope::kHeader;
        else if (sc == "header+body") f.length_scope = LengthScope::kHeaderAndBody;
        else if (sc == "body") f.length_scope = LengthScope::kBody;
        else throw ValidationError(f.name, "length scope must be header, header+body or body");
        std::string u = node["unit"] ? detail::scalar(node["unit"], "unit") : "bytes";
        if (u == "bytes") f.unit = LengthUnit::kBytes;
        else if (u == "bits") f.unit = LengthUnit::kBits;
        else throw ValidationError(f.name, "unit must be bytes or bits");
        if (node["adjust"]) f.adjust = node["adjust"].as<int64_t>();
        break;
      }
      case FieldKind::kNextLayer: {
        if (f.variable || f.width > 64) {
          throw ValidationError(f.name, "next-layer fields need a width of at most 64");
        }
        const YAML::Node& m = node["map"];
        if (!m || !m.IsMap()) throw ValidationError(f.name, "next-layer needs a map");
        for (const auto& kv : m) {
          std::string proto = kv.first.as<std::string>();
          std::vector<BitString> vals;
          if (kv.second.IsSequence()) {
            for (const auto& item : kv.second) {
              vals.push_back(detail::value_literal(item.as<std::string>(),
                                                   f.width, f.name));
            }
          } else {
            vals.push_back(detail::value_literal(kv.second.as<std::string>(),
                                                 f.width, f.name));
          }
          if (vals.empty()) throw ValidationError(f.name, "empty mapping for " + proto);
          f.mapping.emplace_back(proto, std::move(vals));
        }
        std::sort(f.mapping.begin(), f.mapping.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        break;
      }
      case FieldKind::kHandler: {
        if (f.variable || f.width > 64) {
          throw ValidationError(f.name, "handler fields need a width of at most 64");
        }
        f.handler = detail::scalar(node["handler"], "handler of " + f.name);
        if (!registry.contains(f.handler)) {
          throw UnknownHandlerError("field " + f.name + ": no handler named " +
                                    f.handler);
        }
        std::string sc = detail::scalar(node["scope"], "scope of " + f.name);
        if (sc == "header") f.handler_scope = HandlerScope::kHeader;
        else if (sc == "header+body") f.handler_scope = HandlerScope::kHeaderAndBody;
        else if (sc == "body") f.handler_scope = HandlerScope::kBody;
        else if (sc == "preceding") f.handler_scope = HandlerScope::kPreceding;
        else throw ValidationError(f.name, "handler scope must be header, header+body, body or preceding");
        if (node["emit"]) {
          std::string e = detail::scalar(node["emit"], "emit of " + f.name);
          if (e == "zero") f.emit_zero = true;
          else if (e != "real") throw ValidationError(f.name, "emit must be real or zero");
        }
        break;
      }
      case FieldKind::kStateful: {
        if (f.variable) throw ValidationError(f.name, "stateful fields need a width");
        f.key = detail::scalar(node["key"], "key of " + f.name);
        if (f.key.empty()) throw ValidationError(f.name, "stateful key must not be empty");
        if (node["harvest"]) f.harvest = detail::scalar(node["harvest"], "harvest");
        if (node["peer"]) f.peer = detail::scalar(node["peer"], "peer");
        f.default_value =
            node["default"]
                ? detail::value_literal(detail::scalar(node["default"], "default"),
                                        f.width, f.name)
                : BitString::zeros(f.width);
        if (node["match"]) f.match = node["match"].as<bool>();
        break;
      }
      case FieldKind::kFuzzed:
        break;
    }
    g.fields.push_back(std::move(f));
  }

  // Body bookkeeping and the placement rules.
  bool found = false;
  for (size_t i = 0; i < g.fields.size(); ++i) {
    if (g.fields[i].name == g.body_field) {
      g.body_index = i;
      found = true;
    } else if (g.fields[i].variable) {
      throw ValidationError(g.fields[i].name,
                            "variable width is reserved for the body field");
    }
  }
  if (!found) {
    throw ValidationError(g.body_field, "body names a field that does not exist");
  }
  for (size_t i = 0; i < g.fields.size(); ++i) {
    if (i < g.body_index) g.header_prefix_bits += g.fields[i].width;
    if (i > g.body_index) g.trailer_bits += g.fields[i].width;
  }
  if (g.header_prefix_bits % 8 != 0) {
    throw ValidationError(g.body_field,
                          "header fields must pack to whole bytes before the body");
  }
  if (g.trailer_bits % 8 != 0) {
    throw ValidationError(g.body_field,
                          "fields after the body must pack to whole bytes");
  }
  if (!g.body().variable && g.body().width % 8 != 0) {
    throw ValidationError(g.body_field, "fixed body width must be whole bytes");
  }
  return g;
}

inline ProtocolGrammar load_grammar_file(const std::string& path,
                                         const HandlerRegistry& registry) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open grammar document " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_grammar(ss.str(), registry);
}

inline std::string serialize_grammar(const ProtocolGrammar& g) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << g.name;
  out << YAML::Key << "fields" << YAML::Value << YAML::BeginSeq;
  for (const auto& f : g.fields) {
    out << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << f.name;
    out << YAML::Key << "width" << YAML::Value
        << (f.variable ? std::string("variable") : std::to_string(f.width));
    out << YAML::Key << "kind" << YAML::Value << detail::kind_name(f.kind);
    if (f.endian == Endian::kLittle) {
      out << YAML::Key << "endian" << YAML::Value << "little";
    }
    switch (f.kind) {
      case FieldKind::kStatic:
        out << YAML::Key << "value" << YAML::Value << detail::render_literal(f.value);
        break;
      case FieldKind::kLength:
        out << YAML::Key << "scope" << YAML::Value
            << (f.length_scope == LengthScope::kHeader ? "header"
                : f.length_scope == LengthScope::kBody ? "body"
                                                       : "header+body");
        out << YAML::Key << "unit" << YAML::Value
            << (f.unit == LengthUnit::kBits ? "bits" : "bytes");
        if (f.adjust != 0) out << YAML::Key << "adjust" << YAML::Value << f.adjust;
        break;
      case FieldKind::kNextLayer: {
        out << YAML::Key << "map" << YAML::Value << YAML::BeginMap;
        for (const auto& [proto, vals] : f.mapping) {
          out << YAML::Key << proto << YAML::Value;
          if (vals.size() == 1) {
            out << detail::render_literal(vals[0]);
          } else {
            out << YAML::BeginSeq;
            for (const auto& v : vals) out << detail::render_literal(v);
            out << YAML::EndSeq;
          }
        }
        out << YAML::EndMap;
        break;
      }
      case FieldKind::kHandler:
        out << YAML::Key << "handler" << YAML::Value << f.handler;
        out << YAML::Key << "scope" << YAML::Value
            << (f.handler_scope == HandlerScope::kHeader ? "header"
                : f.handler_scope == HandlerScope::kBody ? "body"
                : f.handler_scope == HandlerScope::kPreceding ? "preceding"
                                                              : "header+body");
        if (f.emit_zero) out << YAML::Key << "emit" << YAML::Value << "zero";
        break;
      case FieldKind::kStateful:
        out << YAML::Key << "key" << YAML::Value << f.key;
        if (!f.harvest.empty()) {
          out << YAML::Key << "harvest" << YAML::Value << f.harvest;
        }
        if (!f.peer.empty()) out << YAML::Key << "peer" << YAML::Value << f.peer;
        if (!f.default_value.is_zero()) {
          out << YAML::Key << "default" << YAML::Value
              << detail::render_literal(f.default_value);
        }
        if (f.match) out << YAML::Key << "match" << YAML::Value << true;
        break;
      case FieldKind::kFuzzed:
        break;
    }
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::Key << "body" << YAML::Value << g.body_field;
  if (!g.lower.empty()) {
    out << YAML::Key << "lower" << YAML::Value << YAML::BeginSeq;
    for (const auto& l : g.lower) out << l;
    out << YAML::EndSeq;
  }
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

// The full protocol universe for one campaign: grammar lookup, cross
// reference validation and chain resolution.
class GrammarSet {
 public:
  void add(ProtocolGrammar g) {
    if (by_name_.count(g.name)) {
      throw ValidationError(g.name, "duplicate protocol name: " + g.name);
    }
    by_name_.emplace(g.name, std::move(g));
  }

  bool contains(const std::string& name) const { return by_name_.count(name); }

  const ProtocolGrammar& at(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) {
      throw UnresolvedProtocolError("no grammar named " + name);
    }
    return it->second;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& [n, g] : by_name_) out.push_back(n);
    return out;
  }

  std::vector<std::string> frame_level() const {
    std::vector<std::string> out;
    for (const auto& [n, g] : by_name_) {
      if (g.frame_level()) out.push_back(n);
    }
    return out;
  }

  // Protocols whose immediate lower layer is `name`.
  std::vector<std::string> children(const std::string& name) const {
    std::vector<std::string> out;
    for (const auto& [n, g] : by_name_) {
      if (!g.lower.empty() && g.lower.back() == name) out.push_back(n);
    }
    return out;
  }

  // Every lower link and next-layer mapping key must resolve inside the set.
  void validate() const {
    for (const auto& [n, g] : by_name_) {
      for (const auto& l : g.lower) {
        if (!contains(l)) {
          throw UnresolvedProtocolError("protocol " + n +
                                        " names unknown lower layer " + l);
        }
      }
      for (const auto& f : g.fields) {
        for (const auto& [proto, vals] : f.mapping) {
          if (!contains(proto)) {
            throw UnresolvedProtocolError("protocol " + n + " field " + f.name +
                                          " maps unknown protocol " + proto);
          }
        }
      }
      resolve_stack(n);  // throws on cycles and dangling links
    }
  }

  // Follow default-lower-layers links until a frame-level grammar is reached.
  // Returns the chain bottom-to-top, e.g. dhcp -> [ethernet ipv4 udp dhcp].
  std::vector<std::string> resolve_stack(const std::string& top) const {
    std::vector<std::string> chain = {top};
    std::set<std::string> visited = {top};
    const ProtocolGrammar* cur = &at(top);
    while (!cur->lower.empty()) {
      for (auto it = cur->lower.rbegin(); it != cur->lower.rend(); ++it) {
        if (!visited.insert(*it).second) {
          throw CycleError("lower-layer links cycle through " + *it);
        }
        chain.insert(chain.begin(), *it);
      }
      cur = &at(cur->lower.front());
    }
    return chain;
  }

 private:
  std::map<std::string, ProtocolGrammar> by_name_;
};

inline GrammarSet load_grammar_dir(const std::string& dir,
                                   const std::vector<std::string>& files,
                                   const HandlerRegistry& registry) {
  GrammarSet set;
  for (const auto& f : files) {
    set.add(load_grammar_file(dir + "/" + f, registry));
  }
  set.validate();
  return set;
}

// Load every .yaml document in a directory (sorted by name).
inline GrammarSet load_grammar_dir(const std::string& dir,
                                   const HandlerRegistry& registry) {
  std::vector<std::string> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".yaml") {
      files.push_back(entry.path().filename().string());
    }
  }
  if (files.empty()) throw SchemaError("no grammar documents in " + dir);
  std::sort(files.begin(), files.end());
  return load_grammar_dir(dir, files, registry);
}

}  // namespace netweave
