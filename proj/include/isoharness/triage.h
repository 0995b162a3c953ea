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

// Crash triage: replay candidates to confirm them, drop known false
// positives, group the rest into causes keyed by where the test died and
// how, and classify each cause.

#ifndef ISOHARNESS_TRIAGE_H_
#define ISOHARNESS_TRIAGE_H_

#include <chrono>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "isoharness/executor.h"
#include "isoharness/search.h"
#include "isoharness/testcase.h"

namespace isoharness {

enum class FaultClass {
  kAborted,
  kSegmentationFault,
  kTimeout,
  kIllegalInstruction,
  kBusError,
  kFloatingPointException,
};

// Table names: "Aborted", "Segmentation fault", "Timeout", ...
std::string_view FaultClassName(FaultClass c);

// Maps -11, -6, -4, -7, -8 and timeouts. Throws UnknownExitCode otherwise.
FaultClass Classify(std::optional<int> exit_code, bool timed_out);

// "SIGSEGV" for -11, empty when there is no signal.
std::string SignalName(std::optional<int> exit_code);

struct CrashReport {
  TestCase testcase;
  // -signal; none for a timeout.
  std::optional<int> exit_code;
  std::string signal_name;
  std::optional<StatementLocator> locator;
  bool reproduced = false;
  int replay_runs = 0;

  bool timed_out() const { return !exit_code.has_value(); }
  friend bool operator==(const CrashReport&, const CrashReport&) = default;
};

// Unreplayed report straight from a search result.
CrashReport ReportFromCandidate(const TestCase& tc, const ExecutionResult& r);

struct ConfirmOptions {
  int replay_runs = 5;
  std::chrono::milliseconds replay_timeout{30'000};
};

// Replays every candidate (without any synthetic fault) through `executor`,
// stopping a candidate at its first diverging replay. A report is
// reproduced iff every replay matched the original exit code and locator.
std::vector<CrashReport> Confirm(std::span<const CrashCandidate> candidates,
                                 Executor& executor,
                                 const ConfirmOptions& options = {});

enum class DedupeKey { kCallee, kCalleeAndIndex };

std::string_view DedupeKeyName(DedupeKey key);
// "callee" or "callee+index". Throws ValidationError.
DedupeKey ParseDedupeKey(std::string_view name);

struct CauseKey {
  std::string callee;  // empty when the test died before its first statement
  std::optional<size_t> statement_index;  // only with kCalleeAndIndex
  std::optional<int> exit_code;

  friend bool operator==(const CauseKey&, const CauseKey&) = default;
  friend auto operator<=>(const CauseKey&, const CauseKey&) = default;
};

CauseKey KeyOf(const CrashReport& report, DedupeKey key);

struct CrashCause {
  CauseKey key;
  // None when the exit code is outside the classification table.
  std::optional<FaultClass> fault_class;
  CrashReport representative;
  size_t member_count = 0;

  friend bool operator==(const CrashCause&, const CrashCause&) = default;
};

// One cause per distinct key among the reproduced reports, sorted by key.
// The representative is the member with the fewest statements, then the
// lowest id, then the shortest (then lexicographically least) encoding.
std::vector<CrashCause> Dedupe(std::span<const CrashReport> reports,
                               DedupeKey key = DedupeKey::kCallee);

struct ExclusionConfig {
  std::set<std::string> excluded_callees;
  // Drop workers killed by SIGKILL without a timeout: that is how the
  // kernel ends a process that ran out of memory.
  bool drop_oom_kills = true;
};

std::vector<CrashReport> FilterExclusions(std::span<const CrashReport> reports,
                                          const ExclusionConfig& config);

nlohmann::json CrashReportToJson(const CrashReport& r);
CrashReport CrashReportFromJson(const nlohmann::json& j);
nlohmann::json CausesToJson(std::span<const CrashCause> causes);
std::vector<CrashCause> CausesFromJson(const nlohmann::json& j);

// Fault-type distribution over causes: one row per crash reason present,
// sorted by reason.
struct FaultRow {
  std::string reason;     // fault class name, or "Unknown"
  std::string exit_code;  // "-11", or "None" for timeouts
  std::string signal;     // "SIGSEGV", or "N/A"
  size_t count = 0;
  double percentage = 0.0;
};

std::vector<FaultRow> FaultDistribution(std::span<const CrashCause> causes);
std::string RenderFaultTable(std::span<const CrashCause> causes);

}  // namespace isoharness

#endif  // ISOHARNESS_TRIAGE_H_
