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

#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "netweave/encapsulator.hpp"
#include "netweave/errors.hpp"
#include "netweave/extractor.hpp"
#include "netweave/fuzzer.hpp"
#include "netweave/mock_ens.hpp"
#include "netweave/netconfig.hpp"
#include "netweave/prober.hpp"

namespace netweave {

inline std::string chain_path(const NetworkConfiguration::Chain& c) {
  std::string out;
  for (size_t i = 0; i < c.size(); ++i) {
    if (i) out += '/';
    out += c[i];
  }
  return out;
}

// Drives one execution against the embedded stack for the prober: replay
// the current packet-list (zero fuzz), then optionally one probe frame for
// a candidate chain. Every target frame flows through the extractor, so
// replay runs keep feeding state extraction. `sink` accumulates every block
// any run touched — the campaign folds it into cumulative coverage.
class EnsProbeTarget : public ProbeTarget {
 public:
  EnsProbeTarget(MockEns& ens, Extractor& ex, Encapsulator& enc,
                 const HandlerRegistry& registry)
      : ens_(ens), ex_(ex), enc_(enc), registry_(registry) {}

  CoverageSet run(const NetworkConfiguration& cfg,
                  const NetworkConfiguration::Chain* probe) override {
    ens_.reset();
    ConnectionState conn;
    enc_.begin_replay(cfg);
    for (const Bytes& f : ens_.take_boot()) ex_.send_packet(f, cfg, conn);
    while (auto frame = enc_.get_packet(cfg, conn)) {
      for (const Bytes& o : ens_.step(*frame)) ex_.send_packet(o, cfg, conn);
    }
    ++runs_;
    if (probe == nullptr) return drain();
    drain();  // replay blocks are ambient context, not the probe's credit
    for (const Bytes& f : generate_probe(*probe, cfg, &conn, registry_)) {
      for (const Bytes& o : ens_.step(f)) ex_.send_packet(o, cfg, conn);
    }
    return drain();
  }

  CoverageSet take_sink() {
    CoverageSet out = std::move(sink_);
    sink_ = CoverageSet{};
    return out;
  }

  uint64_t runs() const { return runs_; }

 private:
  CoverageSet drain() {
    CoverageSet c;
    for (uint32_t id : ens_.take_trace()) {
      c.insert(id);
      sink_.insert(id);
    }
    return c;
  }

  MockEns& ens_;
  Extractor& ex_;
  Encapsulator& enc_;
  const HandlerRegistry& registry_;
  CoverageSet sink_;
  uint64_t runs_ = 0;
};

struct CampaignConfig {
  std::string profile;
  std::string mode;  // base | rand | pemu
  uint64_t executions = 0;
  uint64_t seed = 0;
  uint64_t probe_window = 10000;
  uint64_t probe_startup = 1000;  // no probing before this many executions
  size_t probe_threshold = 1;
  int fault_budget = 0;
  bool handshakes = true;

  // Called after every fuzz execution with its index and raw trace.
  std::function<void(uint64_t, const std::vector<uint32_t>&)> on_execution;
};

struct CampaignReport {
  std::string profile;
  std::string mode;
  uint64_t executions = 0;
  uint64_t seed = 0;
  uint64_t probe_window = 0;
  size_t probe_threshold = 0;
  int fault_budget = 0;
  bool handshakes = true;

  uint64_t handler_invocations = 0;
  std::vector<uint32_t> blocks;  // sorted, distinct
  std::vector<std::pair<uint64_t, size_t>> curve;  // change points
  std::map<std::string, uint64_t> first_reach;     // band -> execution
  std::vector<std::string> tree;
  std::vector<std::pair<std::string, std::string>> values;  // key, width:hex
  std::vector<std::string> probe_rounds;
  std::vector<std::string> audit;

  std::string serialize() const;
  static CampaignReport parse(const std::string& text);
};

inline std::string CampaignReport::serialize() const {
  std::ostringstream out;
  out << "netweave-report v1\n";
  out << "profile " << profile << '\n';
  out << "mode " << mode << '\n';
  out << "executions " << executions << '\n';
  out << "seed " << seed << '\n';
  out << "probe-window " << probe_window << '\n';
  out << "probe-threshold " << probe_threshold << '\n';
  out << "fault-budget " << fault_budget << '\n';
  out << "handshakes " << (handshakes ? "on" : "off") << '\n';
  out << "handler-invocations " << handler_invocations << '\n';
  out << "distinct-blocks " << blocks.size() << '\n';
  out << "blocks";
  for (uint32_t b : blocks) out << ' ' << b;
  out << '\n';
  out << "curve";
  for (const auto& [e, c] : curve) out << ' ' << e << ':' << c;
  out << '\n';
  out << "first-reach";
  for (const auto& [band, e] : first_reach) out << ' ' << band << ':' << e;
  out << '\n';
  for (const auto& line : tree) out << "tree " << line << '\n';
  for (const auto& [k, v] : values) out << "value " << k << ' ' << v << '\n';
  for (const auto& line : probe_rounds) out << "probe-round " << line << '\n';
  for (const auto& line : audit) out << "audit " << line << '\n';
  out << "end\n";
  return out.str();
}

inline CampaignReport CampaignReport::parse(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "netweave-report v1") {
    throw ConfigError("not a netweave report: bad header");
  }
  CampaignReport r;
  bool ended = false;
  while (std::getline(in, line)) {
    if (line == "end") {
      ended = true;
      break;
    }
    size_t sp = line.find(' ');
    std::string key = line.substr(0, sp);
    std::string rest = sp == std::string::npos ? "" : line.substr(sp + 1);
    if (key == "profile") {
      r.profile = rest;
    } else if (key == "mode") {
      r.mode = rest;
    } else if (key == "executions") {
      r.executions = std::stoull(rest);
    } else if (key == "seed") {
      r.seed = std::stoull(rest);
    } else if (key == "probe-window") {
      r.probe_window = std::stoull(rest);
    } else if (key == "probe-threshold") {
      r.probe_threshold = std::stoull(rest);
    } else if (key == "fault-budget") {
      r.fault_budget = std::stoi(rest);
    } else if (key == "handshakes") {
      r.handshakes = rest == "on";
    } else if (key == "handler-invocations") {
      r.handler_invocations = std::stoull(rest);
    } else if (key == "distinct-blocks") {
      // implied by the blocks line; kept readable in the file
    } else if (key == "blocks") {
      std::istringstream bs(rest);
      uint32_t b;
      while (bs >> b) r.blocks.push_back(b);
    } else if (key == "curve") {
      std::istringstream cs(rest);
      std::string tok;
      while (cs >> tok) {
        size_t colon = tok.find(':');
        r.curve.emplace_back(std::stoull(tok.substr(0, colon)),
                             std::stoull(tok.substr(colon + 1)));
      }
    } else if (key == "first-reach") {
      std::istringstream fs(rest);
      std::string tok;
      while (fs >> tok) {
        size_t colon = tok.rfind(':');
        r.first_reach[tok.substr(0, colon)] =
            std::stoull(tok.substr(colon + 1));
      }
    } else if (key == "tree") {
      r.tree.push_back(rest);
    } else if (key == "value") {
      size_t s2 = rest.find(' ');
      r.values.emplace_back(rest.substr(0, s2), rest.substr(s2 + 1));
    } else if (key == "probe-round") {
      r.probe_rounds.push_back(rest);
    } else if (key == "audit") {
      r.audit.push_back(rest);
    } else {
      throw ConfigError("unrecognized report line: " + key);
    }
  }
  if (!ended) throw ConfigError("truncated report: no end marker");
  return r;
}

struct CampaignResult {
  CampaignReport report;
  NetworkConfiguration config;       // final protocol tree and bindings
  std::vector<RoundReport> rounds;   // every probe round, in order
};

namespace detail {

inline void validate_campaign(const CampaignConfig& cc) {
  EnsProfile::by_name(cc.profile);  // throws on unknown profile
  if (cc.executions == 0) throw ConfigError("executions must be positive");
  if (cc.mode != "base" && cc.mode != "rand" && cc.mode != "pemu") {
    throw ConfigError("unknown mode: " + cc.mode +
                      " (expected base, rand, or pemu)");
  }
  if (cc.mode == "pemu") {
    if (cc.probe_window == 0) throw ConfigError("probe-window must be positive");
    if (cc.probe_threshold == 0) {
      throw ConfigError("probe-threshold must be positive");
    }
  }
  if (cc.fault_budget < 0) throw ConfigError("fault-budget must be >= 0");
}

// Coverage bookkeeping: distinct blocks, the growth curve (change points
// only), and the first execution index to touch each block band.
struct CoverageLedger {
  std::set<uint32_t> blocks;
  std::vector<std::pair<uint64_t, size_t>> curve;
  std::map<std::string, uint64_t> first_reach;

  bool absorb(const std::vector<uint32_t>& ids, uint64_t at) {
    bool novel = false;
    for (uint32_t id : ids) {
      if (blocks.insert(id).second) {
        novel = true;
        first_reach.emplace(block_band(id), at);
      }
    }
    if (novel) curve.emplace_back(at, blocks.size());
    return novel;
  }
};

inline std::string round_summary(const RoundReport& r) {
  std::ostringstream out;
  out << "index=" << r.round << " frontier=" << r.frontier_size << " scored=";
  if (r.scores.empty()) {
    out << '-';
  } else {
    for (size_t i = 0; i < r.scores.size(); ++i) {
      if (i) out << ',';
      out << chain_path(r.scores[i].chain) << ':' << r.scores[i].unique << '/'
          << r.scores[i].coverage;
    }
  }
  out << " accepted=";
  if (r.accepted.empty()) {
    out << '-';
  } else {
    for (size_t i = 0; i < r.accepted.size(); ++i) {
      if (i) out << ',';
      out << chain_path(r.accepted[i]);
    }
  }
  return out.str();
}

inline std::string probe_round_line(uint64_t at, const RoundReport& r) {
  return "exec=" + std::to_string(at) + ' ' + round_summary(r);
}

}  // namespace detail

// Probe rounds back-to-back until one accepts nothing: the tree is at a
// fixed point for the current bindings. Analysis runs before every round so
// probes are assembled with the freshest extracted state.
inline std::vector<RoundReport> probe_to_fixed_point(
    NetworkConfiguration& cfg, ProbeTarget& target, Extractor& ex,
    size_t threshold, uint64_t first_round_index, size_t max_rounds = 32) {
  std::vector<RoundReport> rounds;
  for (size_t i = 0; i < max_rounds; ++i) {
    ex.reanalyze_unknowns(cfg);
    ex.analyze_candidates(cfg);
    RoundReport r =
        probing_round(cfg, target, threshold, first_round_index + rounds.size());
    bool done = r.accepted.empty();
    rounds.push_back(std::move(r));
    if (done) break;
  }
  ex.reanalyze_unknowns(cfg);
  ex.analyze_candidates(cfg);
  return rounds;
}

inline CampaignResult run_campaign(const CampaignConfig& cc,
                                   const GrammarSet& grammars,
                                   const HandlerRegistry& registry) {
  detail::validate_campaign(cc);
  MockEns ens(EnsProfile::by_name(cc.profile), cc.seed);
  NetworkConfiguration cfg(&grammars, cc.handshakes);
  Extractor ex(&grammars, &registry);
  Encapsulator enc(&registry);
  EnsProbeTarget probe_target(ens, ex, enc, registry);
  Fuzzer fuzzer(cc.seed);

  detail::CoverageLedger ledger;
  std::vector<std::string> round_lines;
  std::vector<RoundReport> all_rounds;
  uint64_t handler0 = handler_invocation_counter().load();

  for (uint64_t exec = 0; exec < cc.executions; ++exec) {
    if (cc.mode == "pemu" && exec > 0 && exec >= cc.probe_startup &&
        exec % cc.probe_window == 0) {
      std::vector<RoundReport> rounds = probe_to_fixed_point(
          cfg, probe_target, ex, cc.probe_threshold, all_rounds.size() + 1);
      for (const RoundReport& r : rounds) {
        round_lines.push_back(detail::probe_round_line(exec, r));
        all_rounds.push_back(r);
      }
      CoverageSet pause = probe_target.take_sink();
      ledger.absorb({pause.blocks.begin(), pause.blocks.end()}, exec);
    }

    Bytes input = fuzzer.next_input();
    std::vector<uint32_t> trace;

    if (cc.mode == "base") {
      // Whole input, one frame, no protocol awareness at all.
      ens.reset();
      ens.take_boot();
      ens.step(input);
      trace = ens.take_trace();
    } else if (cc.mode == "rand") {
      // Input chopped into arbitrary-length frames; still no protocol
      // awareness, but the target sees traffic shaped like traffic.
      ens.reset();
      ens.take_boot();
      size_t pos = 0;
      while (pos < input.size()) {
        size_t len = 1 + input[pos] % 64;
        ++pos;
        size_t take = std::min(len, input.size() - pos);
        if (take == 0) break;
        Bytes frame(input.begin() + long(pos), input.begin() + long(pos + take));
        pos += take;
        ens.step(frame);
      }
      trace = ens.take_trace();
    } else {
      // Full engine: encapsulate, converse, extract.
      ens.reset();
      ConnectionState conn;
      enc.begin_execution(cfg, input, cc.fault_budget);
      for (const Bytes& f : ens.take_boot()) ex.send_packet(f, cfg, conn);
      while (auto frame = enc.get_packet(cfg, conn)) {
        for (const Bytes& o : ens.step(*frame)) ex.send_packet(o, cfg, conn);
      }
      trace = ens.take_trace();
    }

    if (ledger.absorb(trace, exec)) fuzzer.reward(std::move(input));
    if (cc.on_execution) cc.on_execution(exec, trace);
  }

  if (cc.mode == "pemu") {
    ex.reanalyze_unknowns(cfg);
    ex.analyze_candidates(cfg);
  }

  CampaignReport rep;
  rep.profile = cc.profile;
  rep.mode = cc.mode;
  rep.executions = cc.executions;
  rep.seed = cc.seed;
  rep.probe_window = cc.probe_window;
  rep.probe_threshold = cc.probe_threshold;
  rep.fault_budget = cc.fault_budget;
  rep.handshakes = cc.handshakes;
  rep.handler_invocations = handler_invocation_counter().load() - handler0;
  rep.blocks.assign(ledger.blocks.begin(), ledger.blocks.end());
  rep.curve = std::move(ledger.curve);
  rep.first_reach = std::move(ledger.first_reach);
  rep.tree = cfg.tree_lines();
  for (const auto& [k, v] : cfg.values) {
    rep.values.emplace_back(k, std::to_string(v.width()) + ":" + v.to_hex());
  }
  for (const AuditRecord& a : ex.audit()) rep.audit.push_back(a.line());
  rep.probe_rounds = std::move(round_lines);
  return {std::move(rep), std::move(cfg), std::move(all_rounds)};
}

struct ProbeOnlyResult {
  NetworkConfiguration config;
  std::vector<RoundReport> rounds;
  std::vector<AuditRecord> audit;
  uint64_t target_runs = 0;
};

// Tree discovery alone: no fuzzing, just replay + probe rounds until the
// frontier stops yielding. This is the cold-start path — it begins from an
// empty tree and whatever the target volunteers at boot.
inline ProbeOnlyResult probe_only(const std::string& profile, uint64_t seed,
                                  const GrammarSet& grammars,
                                  const HandlerRegistry& registry,
                                  size_t threshold = 1, bool handshakes = true,
                                  size_t max_rounds = 32) {
  MockEns ens(EnsProfile::by_name(profile), seed);
  NetworkConfiguration cfg(&grammars, handshakes);
  Extractor ex(&grammars, &registry);
  Encapsulator enc(&registry);
  EnsProbeTarget target(ens, ex, enc, registry);
  std::vector<RoundReport> rounds =
      probe_to_fixed_point(cfg, target, ex, threshold, 1, max_rounds);
  return {std::move(cfg), std::move(rounds), ex.audit(), target.runs()};
}

struct ModeStats {
  size_t runs = 0;
  double avg_blocks = 0.0;
  size_t max_blocks = 0;
  size_t combined_blocks = 0;
};

struct ComparisonReport {
  std::string profile;
  std::map<std::string, ModeStats> modes;

  std::string serialize() const {
    std::ostringstream out;
    out << "netweave-compare v1\n";
    out << "profile " << profile << '\n';
    char buf[64];
    for (const auto& [mode, s] : modes) {
      std::snprintf(buf, sizeof buf, "%.1f", s.avg_blocks);
      out << "mode " << mode << " runs " << s.runs << " avg-blocks " << buf
          << " max-blocks " << s.max_blocks << " combined-blocks "
          << s.combined_blocks << '\n';
    }
    auto improvement = [&](const char* hi, const char* lo) {
      auto a = modes.find(hi);
      auto b = modes.find(lo);
      if (a == modes.end() || b == modes.end()) return;
      if (b->second.avg_blocks <= 0.0) return;
      double pct = (a->second.avg_blocks - b->second.avg_blocks) /
                   b->second.avg_blocks * 100.0;
      std::snprintf(buf, sizeof buf, "%+.1f%%", pct);
      out << "improvement " << hi << "-vs-" << lo << ' ' << buf << '\n';
    };
    improvement("pemu", "base");
    improvement("pemu", "rand");
    improvement("rand", "base");
    out << "end\n";
    return out.str();
  }
};

inline ComparisonReport compare_reports(
    const std::vector<CampaignReport>& reports) {
  if (reports.empty()) throw ConfigError("nothing to compare");
  ComparisonReport cmp;
  cmp.profile = reports[0].profile;
  std::map<std::string, std::set<uint32_t>> unions;
  std::map<std::string, size_t> totals;
  for (const CampaignReport& r : reports) {
    if (r.profile != cmp.profile) {
      throw MismatchedProfileError("cannot compare " + r.profile + " against " +
                                   cmp.profile);
    }
    ModeStats& s = cmp.modes[r.mode];
    ++s.runs;
    totals[r.mode] += r.blocks.size();
    s.max_blocks = std::max(s.max_blocks, r.blocks.size());
    unions[r.mode].insert(r.blocks.begin(), r.blocks.end());
  }
  for (auto& [mode, s] : cmp.modes) {
    s.avg_blocks = double(totals[mode]) / double(s.runs);
    s.combined_blocks = unions[mode].size();
  }
  return cmp;
}

}  // namespace netweave
