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

// Call-sequence test cases: the unit that is generated, mutated, shipped to
// a worker process and replayed.
//
// A test is an ordered list of statements. Statement i calls one manifest
// function; a handle argument may refer to the value returned by statement
// j < i (a VarRef). Everything random is driven by an explicit seed.

#ifndef ISOHARNESS_TESTCASE_H_
#define ISOHARNESS_TESTCASE_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "isoharness/manifest.h"

namespace isoharness {

inline constexpr int kTestCaseSchema = 1;
inline constexpr size_t kDefaultMaxLen = 20;

struct NullArg {
  friend bool operator==(const NullArg&, const NullArg&) = default;
};
struct IntArg {
  int64_t value = 0;
  friend bool operator==(const IntArg&, const IntArg&) = default;
};
struct FloatArg {
  double value = 0.0;
  friend bool operator==(const FloatArg&, const FloatArg&) = default;
};
struct BytesArg {
  std::vector<uint8_t> value;
  friend bool operator==(const BytesArg&, const BytesArg&) = default;
};
struct EnumArg {
  int64_t value = 0;
  friend bool operator==(const EnumArg&, const EnumArg&) = default;
};
// Refers to the handle returned by an earlier statement.
struct VarRef {
  size_t statement = 0;
  friend bool operator==(const VarRef&, const VarRef&) = default;
};

using Arg = std::variant<NullArg, IntArg, FloatArg, BytesArg, EnumArg, VarRef>;

struct Statement {
  std::string callee;
  std::vector<Arg> args;

  friend bool operator==(const Statement&, const Statement&) = default;
};

struct StatementLocator {
  std::string callee_symbol;
  size_t statement_index = 0;

  friend bool operator==(const StatementLocator&,
                         const StatementLocator&) = default;
  friend auto operator<=>(const StatementLocator&,
                          const StatementLocator&) = default;
};

struct TestCase {
  std::vector<Statement> statements;
  uint64_t seed_provenance = 0;
  uint64_t id = 0;

  size_t size() const { return statements.size(); }
  StatementLocator LocatorAt(size_t index) const {
    return {statements.at(index).callee, index};
  }

  friend bool operator==(const TestCase&, const TestCase&) = default;
};

struct GenerationOptions {
  size_t max_len = kDefaultMaxLen;
  // Probability that an int literal is drawn from the boundary set
  // {min, max, 0, -1, 1} (clamped to the domain) instead of uniformly.
  double boundary_bias = 0.3;
  // Probability of passing null to a nullable parameter.
  double null_probability = 0.1;
};

// Returns an empty string when `tc` satisfies every invariant against
// `manifest`, otherwise a description of the first violation.
std::string CheckTestCase(const TestCase& tc, const TargetManifest& manifest,
                          size_t max_len = kDefaultMaxLen);

// Throws GenerationError when no function is callable from an empty prefix.
TestCase RandomTest(const TargetManifest& manifest, uint64_t rng_seed,
                    const GenerationOptions& options = {});

// Argument, reference, callee and deletion mutations. The result differs
// from `tc` unless no legal alternative exists; dead ends fall back to
// regeneration at the same maximum length.
TestCase Mutate(const TestCase& tc, const TargetManifest& manifest,
                uint64_t rng_seed, const GenerationOptions& options = {});

// Single-point crossover: prefix of `a` joined with the suffix of `b`, cut at
// the same relative position. Dangling handle references are re-pointed to
// a compatible earlier producer, replaced by null when nullable, or the
// statement is dropped.
TestCase Crossover(const TestCase& a, const TestCase& b,
                   const TargetManifest& manifest, uint64_t rng_seed,
                   const GenerationOptions& options = {});

// Canonical encoding (see docs/reproducer.md). Equal tests give identical
// bytes. Throws DecodeError on malformed input or a foreign schema version.
std::string SerializeTestCase(const TestCase& tc);
TestCase DeserializeTestCase(std::string_view bytes);

// Human-readable one-line-per-statement rendering, e.g. "v1 = make_state()".
std::string RenderTestCase(const TestCase& tc);

}  // namespace isoharness

#endif  // ISOHARNESS_TESTCASE_H_
