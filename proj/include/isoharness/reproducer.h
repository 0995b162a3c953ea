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

// Self-contained crash reproducers: a test plus the outcome it is expected
// to produce, bound to one build of one target. Format: docs/reproducer.md.

#ifndef ISOHARNESS_REPRODUCER_H_
#define ISOHARNESS_REPRODUCER_H_

#include <optional>
#include <string>
#include <string_view>

#include "isoharness/executor.h"
#include "isoharness/manifest.h"
#include "isoharness/testcase.h"

namespace isoharness {

struct Reproducer {
  std::string target_id;
  std::string manifest_hash;
  TestCase testcase;
  // -signal for a crash, 0 for a clean run, none for a timeout.
  std::optional<int> expected_exit_code;
  std::optional<StatementLocator> expected_locator;

  friend bool operator==(const Reproducer&, const Reproducer&) = default;
};

Reproducer MakeReproducer(const TargetManifest& manifest, const TestCase& tc,
                          const ExecutionResult& result);

// Canonical, newline-terminated JSON. Throws DecodeError on parse.
std::string SerializeReproducer(const Reproducer& r);
Reproducer ParseReproducer(std::string_view text);

// Throws HashMismatch unless `r` was recorded against this manifest build.
void CheckReproducerTarget(const Reproducer& r, const TargetManifest& manifest);

struct ReplayVerdict {
  bool reproduced = false;
  ExecutionResult observed;
  std::string summary;  // e.g. "reproduced: signal 11"
};

// Executes the reproducer once and compares exit code and locator.
ReplayVerdict ReplayReproducer(const Reproducer& r, Executor& executor,
                               std::chrono::milliseconds timeout);

// "signal 11", "exit 0", "timeout".
std::string DescribeExitCode(const std::optional<int>& exit_code);

}  // namespace isoharness

#endif  // ISOHARNESS_REPRODUCER_H_
