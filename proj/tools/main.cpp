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

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "netweave/campaign.hpp"

namespace {

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw netweave::ConfigError("cannot open for writing: " + out_path);
  out << text;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw netweave::ConfigError("cannot read: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cmd_run(const netweave::CampaignConfig& cc, const std::string& grammar_dir,
            const std::string& out_path, const std::string& trace_path) {
  const netweave::HandlerRegistry& registry =
      netweave::HandlerRegistry::builtin();
  netweave::GrammarSet grammars =
      netweave::load_grammar_dir(grammar_dir, registry);

  std::ofstream trace_out;
  netweave::CampaignConfig run_cc = cc;
  if (!trace_path.empty()) {
    trace_out.open(trace_path, std::ios::binary);
    if (!trace_out) {
      throw netweave::ConfigError("cannot open for writing: " + trace_path);
    }
    run_cc.on_execution = [&trace_out](uint64_t exec,
                                       const std::vector<uint32_t>& trace) {
      trace_out << exec << ':';
      for (uint32_t id : trace) trace_out << ' ' << id;
      trace_out << '\n';
    };
  }

  netweave::CampaignResult res = run_campaign(run_cc, grammars, registry);
  emit(res.report.serialize(), out_path);
  return 0;
}

int cmd_probe_only(const std::string& profile, uint64_t seed, size_t threshold,
                   bool handshakes, size_t max_rounds,
                   const std::string& grammar_dir, const std::string& out_path) {
  const netweave::HandlerRegistry& registry =
      netweave::HandlerRegistry::builtin();
  netweave::GrammarSet grammars =
      netweave::load_grammar_dir(grammar_dir, registry);
  netweave::ProbeOnlyResult res = netweave::probe_only(
      profile, seed, grammars, registry, threshold, handshakes, max_rounds);

  std::ostringstream out;
  out << "netweave-probe v1\n";
  out << "profile " << profile << '\n';
  out << "seed " << seed << '\n';
  out << "probe-threshold " << threshold << '\n';
  out << "handshakes " << (handshakes ? "on" : "off") << '\n';
  out << "target-runs " << res.target_runs << '\n';
  for (const netweave::RoundReport& r : res.rounds) {
    out << "round " << netweave::detail::round_summary(r) << '\n';
  }
  for (const auto& line : res.config.tree_lines()) out << "tree " << line << '\n';
  for (const auto& [k, v] : res.config.values) {
    out << "value " << k << ' ' << v.width() << ':' << v.to_hex() << '\n';
  }
  for (const auto& a : res.audit) out << "audit " << a.line() << '\n';
  out << "end\n";
  emit(out.str(), out_path);
  return 0;
}

int cmd_compare(const std::vector<std::string>& paths,
                const std::string& out_path) {
  std::vector<netweave::CampaignReport> reports;
  for (const std::string& p : paths) {
    reports.push_back(netweave::CampaignReport::parse(slurp(p)));
  }
  netweave::ComparisonReport cmp = netweave::compare_reports(reports);
  emit(cmp.serialize(), out_path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "netweave: protocol-aware packet encapsulation for stack fuzzing"};
  app.require_subcommand(1);

  // --- run ---------------------------------------------------------------
  netweave::CampaignConfig cc;
  std::string grammar_dir = "protocols";
  std::string out_path;
  std::string trace_path;
  bool no_handshakes = false;

  CLI::App* run = app.add_subcommand("run", "run one fuzzing campaign");
  run->add_option("--profile", cc.profile, "target profile name")->required();
  run->add_option("--mode", cc.mode, "base, rand, or pemu")->required();
  run->add_option("--executions", cc.executions, "number of fuzz executions")
      ->required();
  run->add_option("--seed", cc.seed, "campaign seed");
  run->add_option("--probe-window", cc.probe_window,
                  "executions between probing pauses");
  run->add_option("--probe-threshold", cc.probe_threshold,
                  "unique blocks needed to accept a candidate");
  run->add_option("--fault-budget", cc.fault_budget,
                  "max mutated fields per assembled packet");
  run->add_flag("--no-handshakes", no_handshakes,
                "drop handshake plans from every packet-list");
  run->add_option("--grammars", grammar_dir, "protocol grammar directory");
  run->add_option("--out", out_path, "write the report here (default stdout)");
  run->add_option("--trace-out", trace_path,
                  "append per-execution block traces to this file");

  // --- probe-only ----------------------------------------------------------
  std::string po_profile;
  uint64_t po_seed = 0;
  size_t po_threshold = 1;
  size_t po_max_rounds = 32;
  bool po_no_handshakes = false;
  std::string po_grammar_dir = "protocols";
  std::string po_out;

  CLI::App* po = app.add_subcommand(
      "probe-only", "discover the protocol tree without fuzzing");
  po->add_option("--profile", po_profile, "target profile name")->required();
  po->add_option("--seed", po_seed, "target seed");
  po->add_option("--probe-threshold", po_threshold,
                 "unique blocks needed to accept a candidate");
  po->add_option("--max-rounds", po_max_rounds, "probing round cap");
  po->add_flag("--no-handshakes", po_no_handshakes,
               "drop handshake plans from every packet-list");
  po->add_option("--grammars", po_grammar_dir, "protocol grammar directory");
  po->add_option("--out", po_out, "write the report here (default stdout)");

  // --- compare -------------------------------------------------------------
  std::vector<std::string> cmp_paths;
  std::string cmp_out;
  CLI::App* cmp = app.add_subcommand("compare", "compare campaign reports");
  cmp->add_option("reports", cmp_paths, "report files to compare")
      ->required()
      ->expected(-1);
  cmp->add_option("--out", cmp_out, "write the comparison here (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      cc.handshakes = !no_handshakes;
      return cmd_run(cc, grammar_dir, out_path, trace_path);
    }
    if (po->parsed()) {
      return cmd_probe_only(po_profile, po_seed, po_threshold,
                            !po_no_handshakes, po_max_rounds, po_grammar_dir,
                            po_out);
    }
    if (cmp->parsed()) return cmd_compare(cmp_paths, cmp_out);
  } catch (const netweave::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
