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

// Ground-truth sidecar of a seeded fault corpus target: every fault the
// library can raise, where it fires, and a witness test that triggers it.
// Format: docs/instrumentation.md.

#ifndef ISOHARNESS_GROUND_TRUTH_H_
#define ISOHARNESS_GROUND_TRUTH_H_

#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "isoharness/testcase.h"
#include "isoharness/triage.h"

namespace isoharness {

inline constexpr int kGroundTruthSchema = 1;

struct SeededFault {
  std::string site;     // callee of the statement that faults
  std::string trigger;  // human-readable condition
  // -signal for a crash, none for a hang.
  std::optional<int> expected_exit_code;
  TestCase witness;

  friend bool operator==(const SeededFault&, const SeededFault&) = default;
};

struct GroundTruth {
  std::string target_id;
  std::vector<SeededFault> faults;

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

// Throws ParseError for malformed text and unknown keys.
GroundTruth ParseGroundTruth(std::string_view text);
// Throws IoError in addition.
GroundTruth LoadGroundTruth(const std::filesystem::path& path);
std::string SerializeGroundTruth(const GroundTruth& truth);

// (site, exit code) pairs: the identity of a crash cause keyed by callee.
using FaultSite = std::pair<std::string, std::optional<int>>;
std::set<FaultSite> FaultSites(const GroundTruth& truth);
std::set<FaultSite> FaultSites(std::span<const CrashCause> causes);

}  // namespace isoharness

#endif  // ISOHARNESS_GROUND_TRUTH_H_
