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

#include "netweave/netconfig.hpp"

#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace netweave;
using Chain = NetworkConfiguration::Chain;

TEST_CASE("a fresh configuration knows only the raw frame") {
  NetworkConfiguration cfg(&testutil::grammars());
  REQUIRE(cfg.tree().empty());
  REQUIRE(cfg.tree_lines() == std::vector<std::string>{"raw-frame"});

  auto plans = cfg.plans();
  REQUIRE(plans.size() == 1);
  REQUIRE(plans[0].role == PlanRole::kRaw);
}

TEST_CASE("the initial frontier is the frame-level roots") {
  NetworkConfiguration cfg(&testutil::grammars());
  auto f = cfg.frontier();
  REQUIRE(f == std::vector<Chain>{{"ethernet"}, {"modbus"}});
}

TEST_CASE("accepting a chain extends the frontier with its mapped children") {
  NetworkConfiguration cfg(&testutil::grammars());
  REQUIRE(cfg.accept({"ethernet"}));
  REQUIRE_FALSE(cfg.accept({"ethernet"}));  // idempotent

  auto f = cfg.frontier();
  // ethernet's ethertype maps arp and ipv4; modbus is still an unaccepted
  // root. The accepted root itself is no longer a candidate.
  REQUIRE(f == std::vector<Chain>{{"ethernet", "arp"},
                                  {"ethernet", "ipv4"},
                                  {"modbus"}});
}

TEST_CASE("deep frontiers extend every accepted chain") {
  NetworkConfiguration cfg(&testutil::grammars());
  cfg.accept({"ethernet"});
  cfg.accept({"ethernet", "ipv4"});
  auto f = cfg.frontier();
  REQUIRE(f == std::vector<Chain>{{"ethernet", "arp"},
                                  {"ethernet", "ipv4", "icmpv4"},
                                  {"ethernet", "ipv4", "tcp"},
                                  {"ethernet", "ipv4", "udp"},
                                  {"modbus"}});
}

TEST_CASE("tree lines are stable and raw-frame always leads") {
  NetworkConfiguration cfg(&testutil::grammars());
  cfg.accept({"ethernet", "ipv4"});
  cfg.accept({"ethernet"});
  REQUIRE(cfg.tree_lines() == std::vector<std::string>{
                                  "raw-frame", "ethernet", "ethernet ipv4"});
}

TEST_CASE("plans put handshakes first, fuzz per accepted chain, raw last") {
  NetworkConfiguration cfg(&testutil::grammars());
  cfg.accept({"ethernet"});
  cfg.accept({"ethernet", "arp"});
  cfg.accept({"ethernet", "ipv4"});
  cfg.accept({"ethernet", "ipv4", "tcp"});

  auto plans = cfg.plans(2);
  REQUIRE(plans.size() == 2 + 4 + 1);
  // arp and tcp top stateful chains -> handshake plans, in tree order.
  REQUIRE(plans[0].role == PlanRole::kHandshake);
  REQUIRE(plans[0].chain == Chain{"ethernet", "arp"});
  REQUIRE(plans[1].role == PlanRole::kHandshake);
  REQUIRE(plans[1].chain == Chain{"ethernet", "ipv4", "tcp"});
  // Handshake plans never carry a fault budget; fuzz plans carry the given.
  REQUIRE(plans[1].fault_budget == 0);
  for (size_t i = 2; i < 6; ++i) {
    REQUIRE(plans[i].role == PlanRole::kFuzz);
    REQUIRE(plans[i].fault_budget == 2);
  }
  REQUIRE(plans.back().role == PlanRole::kRaw);
  REQUIRE(plans.back().chain.empty());
}

TEST_CASE("handshakes can be disabled wholesale") {
  NetworkConfiguration cfg(&testutil::grammars(), false);
  cfg.accept({"ethernet"});
  cfg.accept({"ethernet", "arp"});
  for (const auto& p : cfg.plans()) {
    REQUIRE(p.role != PlanRole::kHandshake);
  }
}

TEST_CASE("key defaults come from the grammar declarations") {
  NetworkConfiguration cfg(&testutil::grammars());
  // our-mac is declared with a broadcast default on ethernet's dst-mac.
  auto v = cfg.default_for_key("our-mac");
  REQUIRE(v.has_value());
  REQUIRE(v->to_hex() == "ffffffffffff");
  REQUIRE_FALSE(cfg.default_for_key("no-such-key").has_value());

  // lookup prefers an extracted value over the default.
  cfg.values["our-mac"] = BitString::from_uint(0x061122334455ULL, 48);
  REQUIRE(cfg.lookup("our-mac")->to_uint() == 0x061122334455ULL);
}
