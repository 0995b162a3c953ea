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

#include "isoharness/stats.h"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

#include "isoharness/error.h"
#include "test_support.h"

namespace isoharness {
namespace {

using ::isoharness::testing::OracleA12;
using ::isoharness::testing::OracleExactP;

TEST(Midranks, AveragesTies) {
  std::vector<double> v = {3, 1, 3, 2, 3};
  EXPECT_EQ(Midranks(v), (std::vector<double>{4, 1, 4, 2, 4}));
  EXPECT_TRUE(Midranks(std::vector<double>{}).empty());
}

TEST(VarghaDelaneyA12, WorkedExample) {
  // Of the 9 pairs, 2 beats 1 once and four pairs tie: (1 + 0.5 * 4) / 9.
  std::vector<double> t = {1, 1, 2}, c = {1, 2, 2};
  EXPECT_NEAR(VarghaDelaneyA12(t, c), 3.0 / 9.0, 1e-12);
  EXPECT_NEAR(OracleA12(t, c), 3.0 / 9.0, 1e-12);
}

TEST(VarghaDelaneyA12, Extremes) {
  std::vector<double> lo = {1, 2}, hi = {3, 4, 5};
  EXPECT_DOUBLE_EQ(VarghaDelaneyA12(hi, lo), 1.0);
  EXPECT_DOUBLE_EQ(VarghaDelaneyA12(lo, hi), 0.0);
  EXPECT_DOUBLE_EQ(VarghaDelaneyA12(lo, lo), 0.5);
}

TEST(VarghaDelaneyA12, EmptySampleIsDegenerate) {
  std::vector<double> x = {1}, none;
  EXPECT_THROW(VarghaDelaneyA12(x, none), DegenerateSample);
  EXPECT_THROW(MannWhitneyU(none, x), DegenerateSample);
}

TEST(MannWhitneyU, ExactWorkedExample) {
  // Complete separation of 4 vs 4: 2 of the C(8,4) = 70 splits are as extreme.
  std::vector<double> a = {1, 2, 3, 4}, b = {5, 6, 7, 8};
  MannWhitneyResult r = MannWhitneyU(a, b);
  EXPECT_TRUE(r.exact);
  EXPECT_DOUBLE_EQ(r.u, 0.0);
  EXPECT_NEAR(r.p, 2.0 / 70.0, 1e-12);
}

TEST(MannWhitneyU, ExactUpToTheLimitThenNormal) {
  std::vector<double> a(8, 1.0), b(8, 2.0);
  EXPECT_TRUE(MannWhitneyU(a, b).exact);
  b.push_back(3.0);
  EXPECT_FALSE(MannWhitneyU(a, b).exact);
}

TEST(MannWhitneyU, AllTiedGivesPOne) {
  std::vector<double> a(10, 0.5), b(10, 0.5);
  EXPECT_DOUBLE_EQ(MannWhitneyU(a, b).p, 1.0);
  std::vector<double> c(3, 0.5), d(3, 0.5);
  EXPECT_DOUBLE_EQ(MannWhitneyU(c, d).p, 1.0);
}

// Reference values from scipy.stats.mannwhitneyu (asymptotic, two-sided,
// continuity correction).
TEST(MannWhitneyU, NormalApproximationMatchesReference) {
  std::vector<double> a = {0.1, 0.4, 0.4, 0.9, 0.5, 0.6, 0.7, 0.2, 0.8, 0.3};
  std::vector<double> b = {0.2, 0.25, 0.4, 0.1, 0.05, 0.3, 0.35, 0.15, 0.5, 0.45};
  MannWhitneyResult r = MannWhitneyU(a, b);
  EXPECT_FALSE(r.exact);
  EXPECT_DOUBLE_EQ(r.u, 75.0);
  EXPECT_NEAR(r.p, 0.0632228293510783, 1e-12);

  std::vector<double> c, d;
  for (int i = 0; i < 20; ++i) c.push_back(i);
  for (int i = 0; i < 15; ++i) d.push_back(i + 5.5);
  r = MannWhitneyU(c, d);
  EXPECT_DOUBLE_EQ(r.u, 105.0);
  EXPECT_NEAR(r.p, 0.13798587028045473, 1e-12);
}

TEST(Stats, ExhaustiveSmallSamplesMatchOracles) {
  // Every pair of samples drawn from {0, 1, 2} with sizes summing to <= 7.
  for (size_t n1 = 1; n1 <= 4; ++n1) {
    for (size_t n2 = 1; n1 + n2 <= 7; ++n2) {
      size_t combos = 1;
      for (size_t i = 0; i < n1 + n2; ++i) combos *= 3;
      for (size_t code = 0; code < combos; ++code) {
        std::vector<double> a, b;
        size_t c = code;
        for (size_t i = 0; i < n1 + n2; ++i, c /= 3) {
          (i < n1 ? a : b).push_back(static_cast<double>(c % 3));
        }
        double a12 = VarghaDelaneyA12(a, b);
        ASSERT_NEAR(a12, OracleA12(a, b), 1e-12);
        MannWhitneyResult r = MannWhitneyU(a, b);
        ASSERT_NEAR(r.u, a12 * n1 * n2, 1e-9);
        ASSERT_NEAR(r.p, OracleExactP(a, b), 1e-9);
      }
    }
  }
}

TEST(Stats, SymmetryProperties) {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> value(0, 5), size(1, 12);
  for (int round = 0; round < 300; ++round) {
    std::vector<double> a(size(rng)), b(size(rng));
    for (auto& x : a) x = value(rng);
    for (auto& x : b) x = value(rng);
    EXPECT_NEAR(VarghaDelaneyA12(a, b) + VarghaDelaneyA12(b, a), 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(VarghaDelaneyA12(a, a), 0.5);
    MannWhitneyResult ab = MannWhitneyU(a, b), ba = MannWhitneyU(b, a);
    EXPECT_NEAR(ab.p, ba.p, 1e-12);
    EXPECT_NEAR(ab.u + ba.u, static_cast<double>(a.size() * b.size()), 1e-9);
    EXPECT_GE(ab.p, 0.0);
    EXPECT_LE(ab.p, 1.0);
  }
}

std::vector<RunSample> Samples() {
  std::vector<RunSample> s;
  for (int rep = 0; rep < 6; ++rep) {
    s.push_back({"m1", "subprocess", rep, 0.8 + rep * 0.01, false});
    s.push_back({"m1", "threaded", rep, 0.5, rep < 3});
    s.push_back({"m2", "subprocess", rep, 0.6, false});
    s.push_back({"m2", "threaded", rep, 0.6, false});
  }
  return s;
}

TEST(RunSamples, CsvRoundTrips) {
  auto s = Samples();
  std::string csv = RunSamplesToCsv(s);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "module,mode,rep,coverage,crashed");
  EXPECT_EQ(ParseRunSamples(csv), s);
}

TEST(RunSamples, RejectsMalformedCsv) {
  EXPECT_THROW(ParseRunSamples(""), ParseError);
  EXPECT_THROW(ParseRunSamples("a,b\n"), ParseError);
  const std::string h = "module,mode,rep,coverage,crashed\n";
  EXPECT_THROW(ParseRunSamples(h + "m,x,1,0.5\n"), ParseError);
  EXPECT_THROW(ParseRunSamples(h + "m,x,1,1.5,0\n"), ParseError);
  EXPECT_THROW(ParseRunSamples(h + "m,x,one,0.5,0\n"), ParseError);
  EXPECT_THROW(ParseRunSamples(h + "m,x,1,0.5,maybe\n"), ParseError);
  EXPECT_EQ(ParseRunSamples(h + "m,x,1,0.5,true\r\n").size(), 1u);
}

TEST(SummarizeModes, CoverageCountsCrashesAsZero) {
  auto s = Samples();
  ModeSummary sum = SummarizeModes(s, "subprocess", "threaded");
  ASSERT_EQ(sum.modules.size(), 2u);
  EXPECT_EQ(sum.modules[0].module, "m1");
  EXPECT_DOUBLE_EQ(sum.modules[0].a12, 1.0);
  EXPECT_EQ(sum.modules[0].verdict, Verdict::kBetterSignificant);
  EXPECT_DOUBLE_EQ(sum.modules[1].a12, 0.5);
  EXPECT_EQ(sum.modules[1].verdict, Verdict::kEqual);
  EXPECT_EQ(sum.totals[Verdict::kBetterSignificant], 1u);
  EXPECT_EQ(sum.totals[Verdict::kEqual], 1u);
  EXPECT_DOUBLE_EQ(sum.mean_a12, 0.75);
}

TEST(SummarizeModes, CrashMetricPrefersFewerCrashes) {
  auto s = Samples();
  ModeSummary sum = SummarizeModes(s, "threaded", "subprocess", "crashes");
  EXPECT_DOUBLE_EQ(sum.modules[0].a12, OracleA12({0, 0, 0, 1, 1, 1},
                                                   {1, 1, 1, 1, 1, 1}));
  EXPECT_EQ(sum.modules[0].verdict, Verdict::kWorse);
}

TEST(SummarizeModes, MissingPairsAndBadMetric) {
  std::vector<RunSample> s = {{"m", "a", 0, 0.5, false}};
  EXPECT_THROW(SummarizeModes(s, "a", "b"), MissingPair);
  EXPECT_THROW(SummarizeModes(s, "x", "y"), MissingPair);
  EXPECT_THROW(SummarizeModes(s, "a", "b", "speed"), ValidationError);
}

TEST(SummarizeModes, JsonAndTable) {
  auto s = Samples();
  ModeSummary sum = SummarizeModes(s, "subprocess", "threaded");
  auto j = ModeSummaryToJson(sum);
  EXPECT_EQ(j["treatment"], "subprocess");
  EXPECT_EQ(j["modules"].size(), 2u);
  std::string table = RenderModeSummary(sum);
  EXPECT_NE(table.find("better (sig)"), std::string::npos);
  EXPECT_NE(table.find("m2"), std::string::npos);
}

}  // namespace
}  // namespace isoharness
