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

#include "netweave/grammar.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace netweave;

static const HandlerRegistry& reg() { return HandlerRegistry::builtin(); }

static GrammarSet shipped() { return load_grammar_dir("protocols", reg()); }

TEST_CASE("the shipped protocol universe loads and cross-validates") {
  GrammarSet set = shipped();
  REQUIRE(set.names() == std::vector<std::string>{"arp", "dhcp", "ethernet",
                                                  "icmpv4", "ipv4", "modbus",
                                                  "tcp", "udp"});
  REQUIRE(set.frame_level() == std::vector<std::string>{"ethernet", "modbus"});
  REQUIRE(set.children("ethernet") == std::vector<std::string>{"arp", "ipv4"});
  REQUIRE(set.children("ipv4") ==
          std::vector<std::string>{"icmpv4", "tcp", "udp"});
  REQUIRE(set.children("udp") == std::vector<std::string>{"dhcp"});
  REQUIRE(set.children("modbus").empty());
}

TEST_CASE("chains resolve bottom to top") {
  GrammarSet set = shipped();
  REQUIRE(set.resolve_stack("ethernet") ==
          std::vector<std::string>{"ethernet"});
  REQUIRE(set.resolve_stack("udp") ==
          std::vector<std::string>{"ethernet", "ipv4", "udp"});
  REQUIRE(set.resolve_stack("dhcp") ==
          std::vector<std::string>{"ethernet", "ipv4", "udp", "dhcp"});
  REQUIRE(set.resolve_stack("modbus") == std::vector<std::string>{"modbus"});
  REQUIRE_THROWS_AS(set.resolve_stack("rtsp"), UnresolvedProtocolError);
}

TEST_CASE("fixed layout arithmetic") {
  GrammarSet set = shipped();

  const auto& ip = set.at("ipv4");
  REQUIRE(ip.header_bytes() == 20);
  REQUIRE(ip.trailer_bytes() == 0);
  REQUIRE(ip.body().variable);
  // version sits in the top nibble, dst-ip in the last four header bytes.
  REQUIRE(ip.field_bit_offset(0, 0) == 0);
  REQUIRE(ip.find("dst-ip") != nullptr);

  const auto& mb = set.at("modbus");
  REQUIRE(mb.header_bytes() == 3);
  REQUIRE(mb.trailer_bytes() == 2);
  REQUIRE(mb.min_bytes() == 5);
  REQUIRE(mb.fields.back().endian == Endian::kLittle);
  REQUIRE(mb.fields.back().handler_scope == HandlerScope::kPreceding);

  const auto& dh = set.at("dhcp");
  REQUIRE(dh.header_bytes() == 243);
  REQUIRE(dh.trailer_bytes() == 0);
  // The trailing option bytes land after sname/file and the cookie.
  size_t cookie_idx = 0;
  for (size_t i = 0; i < dh.fields.size(); ++i) {
    if (dh.fields[i].name == "magic-cookie") cookie_idx = i;
  }
  REQUIRE(dh.field_bit_offset(cookie_idx, 0) == 236 * 8);

  const auto& eth = set.at("ethernet");
  REQUIRE(eth.header_bytes() == 14);
  const auto& tcp = set.at("tcp");
  REQUIRE(tcp.header_bytes() == 20);
  const auto& arp = set.at("arp");
  REQUIRE(arp.header_bytes() == 28);
  const auto& udp = set.at("udp");
  REQUIRE(udp.header_bytes() == 8);
  const auto& icmp = set.at("icmpv4");
  REQUIRE(icmp.header_bytes() == 8);
}

TEST_CASE("next-layer mappings carry per-direction value lists") {
  GrammarSet set = shipped();
  const auto& eth = set.at("ethernet");
  const auto* ethertype = eth.find("ethertype");
  REQUIRE(ethertype != nullptr);
  REQUIRE(ethertype->mapping.size() == 2);
  REQUIRE(ethertype->mapping[0].first == "arp");
  REQUIRE(ethertype->mapping[0].second[0].to_uint() == 0x0806);
  REQUIRE(ethertype->mapping[1].first == "ipv4");
  REQUIRE(ethertype->mapping[1].second[0].to_uint() == 0x0800);

  const auto& udp = set.at("udp");
  const auto* sp = udp.find("src-port");
  REQUIRE(sp->mapping[0].first == "dhcp");
  REQUIRE(sp->mapping[0].second.size() == 2);
  REQUIRE(sp->mapping[0].second[0].to_uint() == 67);
  REQUIRE(sp->mapping[0].second[1].to_uint() == 68);
}

TEST_CASE("serialize then reload is the identity") {
  GrammarSet set = shipped();
  for (const auto& name : set.names()) {
    const auto& g = set.at(name);
    ProtocolGrammar again = load_grammar(serialize_grammar(g), reg());
    REQUIRE(again == g);
  }
}

TEST_CASE("schema violations are rejected") {
  SECTION("duplicate field names") {
    REQUIRE_THROWS_AS(load_grammar(R"(
name: x
fields:
  - {name: a, width: 8, kind: fuzzed}
  - {name: a, width: 8, kind: fuzzed}
  - {name: p, width: variable, kind: fuzzed}
body: p
)",
                                   reg()),
                      ValidationError);
  }

  SECTION("unknown handler") {
    REQUIRE_THROWS_AS(load_grammar(R"(
name: x
fields:
  - {name: c, width: 16, kind: handler, handler: adler32, scope: header}
  - {name: p, width: variable, kind: fuzzed}
body: p
)",
                                   reg()),
                      UnknownHandlerError);
  }

  SECTION("variable width off the body field") {
    REQUIRE_THROWS_AS(load_grammar(R"(
name: x
fields:
  - {name: a, width: variable, kind: fuzzed}
  - {name: p, width: variable, kind: fuzzed}
body: p
)",
                                   reg()),
                      ValidationError);
  }

  SECTION("body must exist") {
    REQUIRE_THROWS_AS(load_grammar(R"(
name: x
fields:
  - {name: a, width: 8, kind: fuzzed}
body: p
)",
                                   reg()),
                      ValidationError);
  }

  SECTION("header must pack to whole bytes") {
    REQUIRE_THROWS_AS(load_grammar(R"(
name: x
fields:
  - {name: a, width: 3, kind: fuzzed}
  - {name: p, width: variable, kind: fuzzed}
body: p
)",
                                   reg()),
                      ValidationError);
  }

  SECTION("sub-byte fields cannot pick an endianness") {
    REQUIRE_THROWS_AS(load_grammar(R"(
name: x
fields:
  - {name: a, width: 4, kind: fuzzed, endian: little}
  - {name: b, width: 4, kind: fuzzed}
  - {name: p, width: variable, kind: fuzzed}
body: p
)",
                                   reg()),
                      ValidationError);
  }

  SECTION("static literal must fit the width") {
    REQUIRE_THROWS_AS(load_grammar(R"(
name: x
fields:
  - {name: a, width: 8, kind: static, value: 0x1ff}
  - {name: p, width: variable, kind: fuzzed}
body: p
)",
                                   reg()),
                      ValidationError);
  }

  SECTION("stateful needs a key") {
    REQUIRE_THROWS_AS(load_grammar(R"(
name: x
fields:
  - {name: a, width: 8, kind: stateful}
  - {name: p, width: variable, kind: fuzzed}
body: p
)",
                                   reg()),
                      Error);
  }

  SECTION("missing top-level keys") {
    REQUIRE_THROWS_AS(load_grammar("name: x\n", reg()), SchemaError);
    REQUIRE_THROWS_AS(load_grammar(": not yaml : [", reg()), SchemaError);
  }
}

TEST_CASE("set-level validation") {
  auto tiny = [](const std::string& name, const std::string& lower) {
    std::string doc = "name: " + name + R"(
fields:
  - {name: p, width: variable, kind: fuzzed}
body: p
)";
    if (!lower.empty()) doc += "lower: [" + lower + "]\n";
    return load_grammar(doc, reg());
  };

  SECTION("duplicate protocol names") {
    GrammarSet set;
    set.add(tiny("a", ""));
    REQUIRE_THROWS_AS(set.add(tiny("a", "")), ValidationError);
  }

  SECTION("dangling lower link") {
    GrammarSet set;
    set.add(tiny("a", "ghost"));
    REQUIRE_THROWS_AS(set.validate(), UnresolvedProtocolError);
  }

  SECTION("dangling mapping key") {
    GrammarSet set;
    set.add(load_grammar(R"(
name: a
fields:
  - name: t
    width: 8
    kind: next-layer
    map: {ghost: 1}
  - {name: p, width: variable, kind: fuzzed}
body: p
)",
                         reg()));
    REQUIRE_THROWS_AS(set.validate(), UnresolvedProtocolError);
  }

  SECTION("lower-layer cycles") {
    GrammarSet set;
    set.add(tiny("a", "b"));
    set.add(tiny("b", "a"));
    REQUIRE_THROWS_AS(set.validate(), CycleError);
    REQUIRE_THROWS_AS(set.resolve_stack("a"), CycleError);
  }

  SECTION("self cycle") {
    GrammarSet set;
    set.add(tiny("a", "a"));
    REQUIRE_THROWS_AS(set.resolve_stack("a"), CycleError);
  }

  SECTION("unknown lookup") {
    GrammarSet set;
    REQUIRE_THROWS_AS(set.at("nope"), UnresolvedProtocolError);
  }
}

TEST_CASE("multi-hop lower fragments expand in declaration order") {
  GrammarSet set;
  set.add(load_grammar(R"(
name: base
fields:
  - {name: p, width: variable, kind: fuzzed}
body: p
)",
                       reg()));
  set.add(load_grammar(R"(
name: mid
fields:
  - {name: p, width: variable, kind: fuzzed}
body: p
lower: [base]
)",
                       reg()));
  set.add(load_grammar(R"(
name: top
fields:
  - {name: p, width: variable, kind: fuzzed}
body: p
lower: [base, mid]
)",
                       reg()));
  set.validate();
  REQUIRE(set.resolve_stack("top") ==
          std::vector<std::string>{"base", "mid", "top"});
}
