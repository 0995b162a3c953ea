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

// The user-facing commands. Each returns the process exit code; harness
// errors propagate as exceptions and are turned into exit code 2 by main().

#ifndef ISOHARNESS_CLI_H_
#define ISOHARNESS_CLI_H_

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "isoharness/modeselect.h"
#include "isoharness/triage.h"

namespace isoharness {

// Settings shared by gen and bench.
struct RunConfig {
  std::filesystem::path manifest;
  std::string mode = "fallback";
  double budget_s = 600;
  double per_test_timeout_s = 10;
  double replay_timeout_s = 30;
  int replay_runs = 5;
  uint64_t seed = 0;
  size_t max_len = kDefaultMaxLen;
  std::filesystem::path out_dir;
  std::set<std::string> exclude;
  std::set<std::string> whitelist;
  std::string dedupe_key = "callee";
  bool keep_oom = false;
  // Replay at most this many candidates (the shortest) per crash key; zero
  // replays all of them.
  size_t max_replays_per_key = 3;
  double inject_rate = 0;
  int inject_signal = 11;
  std::string worker_path;
};

// Search, triage, and artifact export:
//   <out>/suite/NNNN.json     final suite, one reproducer per test
//   <out>/crashes/NNNN.json   one reproducer per unique crash cause
//   <out>/timeline.csv        coverage over time
//   <out>/outcome.json        raw search outcome (input for `triage`)
//   <out>/triage.json, triage.txt
//   <out>/run.json            mode policy, phases, summary
// Crashes found are a successful outcome: returns 0.
int CmdGen(const RunConfig& config, std::ostream& out);

struct ReplayConfig {
  std::filesystem::path reproducer;
  std::filesystem::path manifest;
  double timeout_s = 30;
  std::string worker_path;
};

// Returns 0 iff the reproducer reproduced, 1 otherwise. Throws HashMismatch
// and DecodeError.
int CmdReplay(const ReplayConfig& config, std::ostream& out);

struct TriageConfig {
  std::filesystem::path manifest;
  std::filesystem::path outcome;  // outcome.json written by gen
  std::filesystem::path out_dir;
  double replay_timeout_s = 30;
  int replay_runs = 5;
  std::set<std::string> exclude;
  std::string dedupe_key = "callee";
  bool keep_oom = false;
  size_t max_replays_per_key = 3;
  std::string worker_path;
};

int CmdTriage(const TriageConfig& config, std::ostream& out);

struct BenchConfig {
  std::vector<std::filesystem::path> manifests;
  std::vector<std::string> modes;
  int repetitions = 30;
  double budget_s = 600;
  double per_test_timeout_s = 10;
  uint64_t seed = 0;
  size_t max_len = kDefaultMaxLen;
  std::set<std::string> whitelist;
  std::filesystem::path out_dir;
  std::string worker_path;
};

// Writes <out>/runs.csv, <out>/timelines/<module>-<mode>-<rep>.csv for each
// run that did not crash, and <out>/stats.json comparing the first two
// modes.
int CmdBench(const BenchConfig& config, std::ostream& out);

// Seed of one bench run: base ^ hash(module, mode, rep).
uint64_t BenchSeed(uint64_t base, const std::string& module,
                   const std::string& mode, int rep);

struct StatsConfig {
  std::filesystem::path input;  // runs.csv
  std::string treatment;        // empty: first mode in the file
  std::string control;          // empty: second mode in the file
  std::string metric = "coverage";
  double alpha = 0.05;
  std::filesystem::path json_out;  // optional
};

int CmdStats(const StatsConfig& config, std::ostream& out);

}  // namespace isoharness

#endif  // ISOHARNESS_CLI_H_
