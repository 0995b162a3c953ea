// Copyright 2026 The Isoharness Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "isoharness/cli.h"
#include "isoharness/error.h"
#include "isoharness/executor.h"
#include "isoharness/modeselect.h"

namespace {

using isoharness::BenchConfig;
using isoharness::ReplayConfig;
using isoharness::RunConfig;
using isoharness::StatsConfig;
using isoharness::TriageConfig;

const char* const kModes[] = {"threaded", "subprocess", "heuristic",
                              "fallback", "fallback-heuristic"};

void AddTriageOptions(CLI::App* cmd, double& replay_timeout, int& replay_runs,
                      std::set<std::string>& exclude, std::string& dedupe_key,
                      bool& keep_oom, size_t& max_replays) {
  cmd->add_option("--replay-timeout", replay_timeout,
                  "Seconds before a replay counts as a timeout")
      ->capture_default_str();
  cmd->add_option("--replay-runs", replay_runs, "Replays per crash candidate")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--exclude", exclude,
                  "Drop crashes whose last statement calls this symbol");
  cmd->add_option("--dedupe-key", dedupe_key, "Crash cause key")
      ->capture_default_str()
      ->check(CLI::IsMember({"callee", "callee+index"}));
  cmd->add_flag("--keep-oom", keep_oom, "Keep workers killed by SIGKILL");
  cmd->add_option("--max-replays-per-key", max_replays,
                  "Replay at most this many candidates per crash key (0: all)")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"isoharness: crash-isolating test generation for native APIs"};
  app.require_subcommand(1);

  RunConfig gen;
  CLI::App* gen_cmd = app.add_subcommand("gen", "Generate tests and triage crashes");
  gen_cmd->add_option("--manifest", gen.manifest,
                      "Target manifest, or builtin:<name>")
      ->required();
  gen_cmd->add_option("--out", gen.out_dir, "Output directory")->required();
  gen_cmd->add_option("--mode", gen.mode, "Execution mode")
      ->capture_default_str()
      ->check(CLI::IsMember(std::vector<std::string>(std::begin(kModes),
                                                     std::end(kModes))));
  gen_cmd->add_option("--budget", gen.budget_s, "Search budget in seconds")
      ->capture_default_str();
  gen_cmd->add_option("--timeout", gen.per_test_timeout_s,
                      "Per-test timeout in seconds")
      ->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "RNG seed")->capture_default_str();
  gen_cmd->add_option("--max-len", gen.max_len, "Maximum statements per test")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  gen_cmd->add_option("--whitelist", gen.whitelist,
                      "Target ids the heuristic treats as safe");
  gen_cmd->add_option("--inject-rate", gen.inject_rate,
                      "Fraction of executions given a synthetic fault")
      ->check(CLI::Range(0.0, 1.0));
  gen_cmd->add_option("--inject-signal", gen.inject_signal,
                      "Signal raised by synthetic faults")
      ->capture_default_str();
  gen_cmd->add_option("--worker-path", gen.worker_path, "Harness binary for workers");
  AddTriageOptions(gen_cmd, gen.replay_timeout_s, gen.replay_runs, gen.exclude,
                   gen.dedupe_key, gen.keep_oom, gen.max_replays_per_key);

  ReplayConfig replay;
  CLI::App* replay_cmd = app.add_subcommand("replay", "Replay a reproducer");
  replay_cmd->add_option("reproducer", replay.reproducer, "Reproducer file")
      ->required();
  replay_cmd->add_option("--manifest", replay.manifest,
                         "Target manifest, or builtin:<name>")
      ->required();
  replay_cmd->add_option("--timeout", replay.timeout_s, "Seconds")
      ->capture_default_str();
  replay_cmd->add_option("--worker-path", replay.worker_path,
                         "Harness binary for workers");

  TriageConfig triage;
  CLI::App* triage_cmd =
      app.add_subcommand("triage", "Confirm and group the crashes of a search");
  triage_cmd->add_option("--manifest", triage.manifest,
                         "Target manifest, or builtin:<name>")
      ->required();
  triage_cmd->add_option("--outcome", triage.outcome, "outcome.json from gen")
      ->required();
  triage_cmd->add_option("--out", triage.out_dir, "Output directory")->required();
  triage_cmd->add_option("--worker-path", triage.worker_path,
                         "Harness binary for workers");
  AddTriageOptions(triage_cmd, triage.replay_timeout_s, triage.replay_runs,
                   triage.exclude, triage.dedupe_key, triage.keep_oom,
                   triage.max_replays_per_key);

  BenchConfig bench;
  CLI::App* bench_cmd =
      app.add_subcommand("bench", "Repeat searches across modes and targets");
  bench_cmd->add_option("--manifest", bench.manifests,
                        "Target manifest, or builtin:<name> (repeatable)")
      ->required();
  bench_cmd->add_option("--mode", bench.modes, "Execution mode (repeatable)")
      ->required()
      ->check(CLI::IsMember(std::vector<std::string>(std::begin(kModes),
                                                     std::end(kModes))));
  bench_cmd->add_option("--reps", bench.repetitions, "Repetitions per cell")
      ->capture_default_str();
  bench_cmd->add_option("--budget", bench.budget_s, "Search budget in seconds")
      ->capture_default_str();
  bench_cmd->add_option("--timeout", bench.per_test_timeout_s,
                        "Per-test timeout in seconds")
      ->capture_default_str();
  bench_cmd->add_option("--seed", bench.seed, "Base seed")->capture_default_str();
  bench_cmd->add_option("--max-len", bench.max_len, "Maximum statements per test")
      ->capture_default_str();
  bench_cmd->add_option("--whitelist", bench.whitelist,
                        "Target ids the heuristic treats as safe");
  bench_cmd->add_option("--out", bench.out_dir, "Output directory")->required();
  bench_cmd->add_option("--worker-path", bench.worker_path,
                        "Harness binary for workers");

  StatsConfig stats;
  CLI::App* stats_cmd = app.add_subcommand("stats", "Compare modes on run samples");
  stats_cmd->add_option("--input", stats.input, "runs.csv")->required();
  stats_cmd->add_option("--treatment", stats.treatment, "Treatment mode");
  stats_cmd->add_option("--control", stats.control, "Control mode");
  stats_cmd->add_option("--metric", stats.metric, "coverage or crashes")
      ->capture_default_str()
      ->check(CLI::IsMember({"coverage", "crashes"}));
  stats_cmd->add_option("--alpha", stats.alpha, "Significance level")
      ->capture_default_str();
  stats_cmd->add_option("--json", stats.json_out, "Also write JSON here");

  std::string shm_name;
  bool search_worker = false;
  CLI::App* worker_cmd = app.add_subcommand("worker", "Internal");
  worker_cmd->group("");  // hidden
  auto* shm_opt = worker_cmd->add_option("--shm", shm_name, "Shared region");
  auto* search_opt =
      worker_cmd->add_flag("--search", search_worker, "Run one search phase");
  shm_opt->excludes(search_opt);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*worker_cmd) {
      if (search_worker) return isoharness::RunSearchWorker();
      if (shm_name.empty()) {
        std::cerr << "worker: --shm or --search is required\n";
        return 2;
      }
      return isoharness::RunTestWorker(shm_name);
    }
    if (*gen_cmd) return isoharness::CmdGen(gen, std::cout);
    if (*replay_cmd) return isoharness::CmdReplay(replay, std::cout);
    if (*triage_cmd) return isoharness::CmdTriage(triage, std::cout);
    if (*bench_cmd) return isoharness::CmdBench(bench, std::cout);
    if (*stats_cmd) return isoharness::CmdStats(stats, std::cout);
  } catch (const isoharness::HashMismatch& e) {
    std::cerr << "hash mismatch: " << e.what() << "\n";
    return 2;
  } catch (const isoharness::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
