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

// Choosing and supervising the execution model.
//
// Every search runs inside a search-worker process
// (`<harness> worker --search`) so that a native fault in threaded mode
// takes down the worker and not the caller. The master sends one config
// frame at start and receives one result frame at the end. Under the
// fallback policies an abnormal worker death restarts the whole search once,
// in subprocess mode, with whatever budget is left.

#ifndef ISOHARNESS_MODESELECT_H_
#define ISOHARNESS_MODESELECT_H_

#include <chrono>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "isoharness/manifest.h"
#include "isoharness/search.h"

namespace isoharness {

enum class ModeRequest {
  kThreaded,
  kSubprocess,
  kHeuristic,
  kFallback,
  kFallbackHeuristic,
};

// "threaded", "subprocess", "heuristic", "fallback", "fallback-heuristic".
std::string_view ModeRequestName(ModeRequest mode);
// Also accepts "fallback_heuristic". Throws ValidationError.
ModeRequest ParseModeRequest(std::string_view name);

// True for the policies that restart a crashed search.
bool PermitsRestart(ModeRequest mode);

// Fixed modes return themselves; heuristic and fallback-heuristic pick
// subprocess iff the target classifies as native; fallback starts threaded.
ExecutionModel ResolveInitialMode(ModeRequest mode,
                                  const TargetManifest& manifest,
                                  const std::set<std::string>& whitelist);

struct ModePolicy {
  ModeRequest requested = ModeRequest::kFallback;
  ExecutionModel resolved_initial = ExecutionModel::kThreaded;
  bool restarted = false;
  std::chrono::milliseconds budget_total{0};
  std::chrono::milliseconds budget_consumed_before_restart{0};
};

struct SupervisorOptions {
  // Harness binary for the search worker and the per-test workers it
  // spawns. Empty: $ISOHARNESS_WORKER_PATH, then the running executable.
  std::string worker_path;
  // Slack on top of the phase budget before a silent worker is killed.
  std::chrono::milliseconds grace{30'000};
  int max_restarts = 1;
  // Consecutive timeouts that count as a crash in a threaded phase under a
  // restarting policy.
  int taint_limit = 2;
  uint64_t address_space_cap = 2ULL << 30;
  bool discard_worker_stderr = true;
};

// Exit status of a threaded search worker that gave up on a wedged target.
inline constexpr int kTaintedExitCode = 86;

struct PhaseRecord {
  ExecutionModel model = ExecutionModel::kThreaded;
  uint64_t seed = 0;
  std::chrono::milliseconds budget{0};
  // Master-side wall clock from spawn to the worker's end.
  std::chrono::milliseconds elapsed{0};
  bool crashed = false;
  // e.g. "killed by signal 11"; empty for a normal finish.
  std::string termination;
  // -signal for a signaled worker, the exit status otherwise.
  std::optional<int> exit_code;
};

struct SupervisedOutcome {
  ModePolicy policy;
  std::vector<PhaseRecord> phases;
  // Result of the phase that finished normally, if any.
  std::optional<SearchOutcome> search;
  // The run ended on a crash (no restart permitted, restarts used up, or no
  // budget left).
  bool crashed = false;
  bool budget_exhausted = false;
  int messages_sent = 0;
  int messages_received = 0;

  // A crashed run counts as zero coverage.
  double FinalCoverage() const {
    return crashed || !search ? 0.0 : search->Coverage();
  }
};

// Seed of restart phase `phase` (the first phase is 0).
uint64_t PhaseSeed(uint64_t seed, int phase);

// Throws ValidationError for a non-positive budget and SpawnError when the
// search worker cannot be started.
SupervisedOutcome RunSupervised(ModeRequest mode, const TargetManifest& manifest,
                                const SearchConfig& config,
                                const std::set<std::string>& whitelist,
                                const SupervisorOptions& options = {});

// Entry point of `<harness> worker --search`: reads the config frame, runs
// one search phase, writes the result frame.
int RunSearchWorker();

}  // namespace isoharness

#endif  // ISOHARNESS_MODESELECT_H_
