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

// Nonparametric comparison of run populations: Mann-Whitney U and the
// Vargha-Delaney effect size, plus per-module mode summaries.

#ifndef ISOHARNESS_STATS_H_
#define ISOHARNESS_STATS_H_

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace isoharness {

struct MannWhitneyResult {
  double u = 0.0;  // U statistic of the first sample
  double p = 1.0;  // two-sided
  bool exact = false;
};

// Samples with at most this many values in total use the exact null
// distribution of the rank sum; larger ones a tie-corrected normal
// approximation with continuity correction.
inline constexpr size_t kExactMannWhitneyLimit = 16;

// Throws DegenerateSample if either sample is empty.
MannWhitneyResult MannWhitneyU(std::span<const double> a,
                               std::span<const double> b);

// P(T > C) + 0.5 P(T = C). Throws DegenerateSample.
double VarghaDelaneyA12(std::span<const double> treatment,
                        std::span<const double> control);

// Midranks (1-based) of the pooled values, in input order.
std::vector<double> Midranks(std::span<const double> values);

struct RunSample {
  std::string module;
  std::string mode;
  int rep = 0;
  double coverage = 0.0;
  bool crashed = false;

  friend bool operator==(const RunSample&, const RunSample&) = default;
};

// CSV with header `module,mode,rep,coverage,crashed`. Throws ParseError.
std::vector<RunSample> ParseRunSamples(std::string_view csv);
std::string RunSamplesToCsv(std::span<const RunSample> samples);

enum class Verdict { kBetterSignificant, kBetter, kEqual, kWorse, kWorseSignificant };

std::string_view VerdictName(Verdict v);

struct ModuleComparison {
  std::string module;
  size_t n_treatment = 0;
  size_t n_control = 0;
  double a12 = 0.5;
  double p = 1.0;
  Verdict verdict = Verdict::kEqual;
};

struct ModeSummary {
  std::string treatment;
  std::string control;
  std::string metric;  // "coverage" or "crashes"
  double alpha = 0.05;
  std::vector<ModuleComparison> modules;
  std::map<Verdict, size_t> totals;
  double mean_a12 = 0.5;
};

// Compares `treatment` against `control` per module on coverage (higher is
// better) or on crash indicators (fewer is better). Modules with runs under
// only one of the two modes raise MissingPair.
ModeSummary SummarizeModes(std::span<const RunSample> samples,
                           const std::string& treatment,
                           const std::string& control,
                           const std::string& metric = "coverage",
                           double alpha = 0.05);

nlohmann::json ModeSummaryToJson(const ModeSummary& s);
std::string RenderModeSummary(const ModeSummary& s);

}  // namespace isoharness

#endif  // ISOHARNESS_STATS_H_
