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

// Coverage-seeking test generation: random sampling plus a small
// steady-state genetic algorithm over call sequences, with an archive that
// keeps the shortest test covering each edge.

#ifndef ISOHARNESS_SEARCH_H_
#define ISOHARNESS_SEARCH_H_

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "isoharness/executor.h"
#include "isoharness/observers.h"
#include "isoharness/testcase.h"

namespace isoharness {

enum class ExecutionModel { kThreaded, kSubprocess };

std::string_view ExecutionModelName(ExecutionModel model);

// Self-test facility: attach a synthetic fault to a fraction of executions.
struct FaultInjectionConfig {
  double rate = 0.0;
  int signal_number = 11;
  // No injection before this much of the search budget has elapsed.
  std::chrono::milliseconds after{0};
  // Stop after the first injection.
  bool once = false;
};

struct SearchConfig {
  std::chrono::milliseconds budget{600'000};
  std::chrono::milliseconds per_test_timeout{10'000};
  uint64_t seed = 0;
  size_t max_len = kDefaultMaxLen;
  size_t population_size = 20;  // mu
  size_t offspring_size = 20;   // lambda, parents drawn per generation
  double immigrant_rate = 0.5;
  double crossover_rate = 0.5;
  // Zero means unlimited; otherwise the search also stops after this many
  // executions.
  uint64_t max_executions = 0;
  FaultInjectionConfig injection;
  // Threaded mode only: stop the search after this many consecutive timed
  // out executions (the process is wedged). Zero disables.
  int taint_limit = 0;
  std::vector<RemoteObserverSpec> remote_observers;
};

struct CrashCandidate {
  TestCase testcase;
  ExecutionResult result;
  bool injected = false;
};

struct TimelinePoint {
  int64_t elapsed_ms = 0;
  uint32_t covered = 0;
  uint32_t total = 0;

  friend bool operator==(const TimelinePoint&, const TimelinePoint&) = default;
};

struct SearchOutcome {
  std::vector<TestCase> final_suite;
  std::vector<CrashCandidate> crash_queue;
  std::vector<TimelinePoint> timeline;
  uint64_t executions = 0;
  uint64_t injected_faults = 0;
  uint64_t managed_errors = 0;
  uint64_t timeouts = 0;
  uint32_t covered = 0;
  uint32_t total = 0;
  // The search stopped early because the in-process target wedged.
  bool tainted_abort = false;

  // covered / total; a target with no goals counts as fully covered.
  double Coverage() const {
    return total == 0 ? 1.0 : static_cast<double>(covered) / total;
  }
};

// Per-goal score of one execution: 0 if the edge was hit, 1 otherwise.
// Throws ValidationError unless there is one counter per goal.
std::vector<int> Fitness(const ExecutionResult& result, uint32_t goals);

// Best (shortest) test per covered edge. Once set, an entry is only
// replaced by a strictly shorter test.
class CoverageArchive {
 public:
  explicit CoverageArchive(uint32_t goals) : goals_(goals) {}

  // Returns the number of goals covered for the first time.
  size_t Update(const TestCase& tc, std::span<const uint64_t> edge_hits);

  uint32_t goals() const { return goals_; }
  uint32_t covered() const { return static_cast<uint32_t>(best_.size()); }
  const TestCase* Best(uint32_t goal) const;
  // Distinct archived tests in goal order.
  std::vector<TestCase> Tests() const;

 private:
  uint32_t goals_;
  std::map<uint32_t, TestCase> best_;
};

// Runs until the budget (or max_executions) is spent. Crashing and timed out
// tests never enter the archive; under the subprocess model they are queued
// as crash candidates. `model` tells the search which model `executor`
// implements.
SearchOutcome RunSearch(const SearchConfig& config, Executor& executor,
                        ExecutionModel model,
                        std::span<MainObserver* const> observers = {});

// Counts executions by outcome; the CLI reports these.
class SearchStatistics : public MainObserver {
 public:
  void OnExecution(const TestCase& tc, const ExecutionResult& result,
                   std::span<const ObservationPayload> payloads) override;

  uint64_t executions() const { return executions_; }
  uint64_t count(ExecStatus status) const;
  std::chrono::nanoseconds total_wall_time() const { return wall_; }

 private:
  uint64_t executions_ = 0;
  std::map<ExecStatus, uint64_t> by_status_;
  std::chrono::nanoseconds wall_{0};
};

// JSON forms used by the search-worker protocol and outcome files.
nlohmann::json SearchOutcomeToJson(const SearchOutcome& outcome);
SearchOutcome SearchOutcomeFromJson(const nlohmann::json& j);

// "elapsed_ms,covered,total" with a header line.
std::string TimelineCsv(std::span<const TimelinePoint> timeline);

}  // namespace isoharness

#endif  // ISOHARNESS_SEARCH_H_
