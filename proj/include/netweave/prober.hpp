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
#include <set>
#include <string>
#include <vector>

#include "netweave/encapsulator.hpp"
#include "netweave/errors.hpp"
#include "netweave/netconfig.hpp"

namespace netweave {

struct CoverageSet {
  std::set<uint32_t> blocks;

  void insert(uint32_t id) { blocks.insert(id); }
  void unite(const CoverageSet& o) {
    blocks.insert(o.blocks.begin(), o.blocks.end());
  }
  void subtract(const CoverageSet& o) {
    for (uint32_t id : o.blocks) blocks.erase(id);
  }
  size_t size() const { return blocks.size(); }
  bool contains(uint32_t id) const { return blocks.count(id) != 0; }
};

struct ProbeScore {
  NetworkConfiguration::Chain chain;
  size_t coverage = 0;  // blocks the probe lit at all
  size_t unique = 0;    // blocks no rival candidate lit
  bool accepted = false;
};

// Relative-uniqueness scoring: a candidate's credit is the blocks none of
// its rivals reached. Needs at least two candidates — uniqueness against
// nobody is not a measurement. Results come back ranked: most unique first,
// ties in chain order.
inline std::vector<ProbeScore> score_probes(
    const std::vector<std::pair<NetworkConfiguration::Chain, CoverageSet>>&
        candidates,
    size_t threshold) {
  if (candidates.size() < 2) {
    throw InsufficientCandidatesError(
        "probe scoring needs at least two candidates");
  }
  std::vector<ProbeScore> out;
  for (size_t i = 0; i < candidates.size(); ++i) {
    ProbeScore s;
    s.chain = candidates[i].first;
    s.coverage = candidates[i].second.size();
    for (uint32_t id : candidates[i].second.blocks) {
      bool elsewhere = false;
      for (size_t j = 0; j < candidates.size() && !elsewhere; ++j) {
        elsewhere = j != i && candidates[j].second.contains(id);
      }
      if (!elsewhere) ++s.unique;
    }
    s.accepted = s.unique >= threshold;
    out.push_back(std::move(s));
  }
  std::sort(out.begin(), out.end(), [](const ProbeScore& a,
                                       const ProbeScore& b) {
    if (a.unique != b.unique) return a.unique > b.unique;
    return a.chain < b.chain;
  });
  return out;
}

// One fully-formed frame for the candidate chain: every layer assembled,
// all fuzz-controlled bits zero, state taken from the configuration and the
// session. Bit-identical across calls with equal inputs.
inline std::vector<Bytes> generate_probe(
    const NetworkConfiguration::Chain& chain, const NetworkConfiguration& cfg,
    const ConnectionState* conn, const HandlerRegistry& registry) {
  FuzzStream zero = FuzzStream::zeroes();
  AssembledPacket pkt =
      assemble(chain, chain.size(), cfg, conn, zero, registry);
  return {pkt.frame};
}

// How the prober talks to a target: run one execution — replay the current
// packet-list, then (when given a chain) send its probe — and hand back the
// blocks attributable to it. With no chain the whole execution's coverage
// comes back; that is the round's ambient baseline.
struct ProbeTarget {
  virtual ~ProbeTarget() = default;
  virtual CoverageSet run(const NetworkConfiguration& cfg,
                          const NetworkConfiguration::Chain* probe) = 0;
};

inline size_t update_configuration(
    NetworkConfiguration& cfg,
    const std::vector<NetworkConfiguration::Chain>& accepted) {
  size_t added = 0;
  for (const auto& c : accepted) added += cfg.accept(c) ? 1 : 0;
  return added;
}

struct RoundReport {
  uint64_t round = 0;
  size_t frontier_size = 0;
  std::vector<ProbeScore> scores;
  std::vector<NetworkConfiguration::Chain> accepted;
};

// One probing round: replay for an ambient baseline, probe every frontier
// candidate, subtract the ambient noise, score what remains, and grow the
// tree with the winners. A lone candidate cannot use relative scoring and
// is judged directly against the baseline instead.
inline RoundReport probing_round(NetworkConfiguration& cfg,
                                 ProbeTarget& target, size_t threshold,
                                 uint64_t round_index) {
  RoundReport rep;
  rep.round = round_index;
  CoverageSet ambient = target.run(cfg, nullptr);
  std::vector<NetworkConfiguration::Chain> frontier = cfg.frontier();
  rep.frontier_size = frontier.size();
  if (frontier.empty()) return rep;

  std::vector<std::pair<NetworkConfiguration::Chain, CoverageSet>> cands;
  for (const auto& chain : frontier) {
    CoverageSet cov = target.run(cfg, &chain);
    cov.subtract(ambient);
    cands.push_back({chain, std::move(cov)});
  }
  if (cands.size() == 1) {
    ProbeScore s;
    s.chain = cands[0].first;
    s.coverage = cands[0].second.size();
    s.unique = s.coverage;
    s.accepted = s.unique >= threshold;
    rep.scores = {std::move(s)};
  } else {
    rep.scores = score_probes(cands, threshold);
  }
  for (const auto& s : rep.scores) {
    if (s.accepted) rep.accepted.push_back(s.chain);
  }
  update_configuration(cfg, rep.accepted);
  return rep;
}

}  // namespace netweave
