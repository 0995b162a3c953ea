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

#include "isoharness/search.h"

#include <gtest/gtest.h>

#include <set>

#include "isoharness/error.h"
#include "test_support.h"

namespace isoharness {
namespace {

using ::isoharness::testing::Call;
using ::isoharness::testing::FixtureManifest;
using ::isoharness::testing::MakeTest;
using ::isoharness::testing::Subset;
using namespace std::chrono_literals;

TestCase Sized(size_t n, uint64_t id) {
  std::vector<Statement> st(n, Call("noop"));
  return MakeTest(st, id);
}

TEST(Fitness, ZeroForHitGoals) {
  ExecutionResult r;
  r.edge_hits = {3, 0, 1, 0};
  EXPECT_EQ(Fitness(r, 4), (std::vector<int>{0, 1, 0, 1}));
  EXPECT_THROW(Fitness(r, 2), ValidationError);
}

TEST(CoverageArchive, KeepsTheShortestTestPerGoal) {
  CoverageArchive a(3);
  std::vector<uint64_t> hits01 = {1, 1, 0};
  std::vector<uint64_t> hits1 = {0, 2, 0};
  EXPECT_EQ(a.Update(Sized(3, 1), hits01), 2u);
  EXPECT_EQ(a.covered(), 2u);
  EXPECT_EQ(a.Best(2), nullptr);
  // Same length does not replace.
  EXPECT_EQ(a.Update(Sized(3, 2), hits1), 0u);
  EXPECT_EQ(a.Best(1)->id, 1u);
  // Strictly shorter does.
  EXPECT_EQ(a.Update(Sized(1, 3), hits1), 0u);
  EXPECT_EQ(a.Best(1)->id, 3u);
  EXPECT_EQ(a.Best(0)->id, 1u);
  // Longer never does.
  a.Update(Sized(5, 4), hits01);
  EXPECT_EQ(a.Best(0)->id, 1u);
  auto tests = a.Tests();
  ASSERT_EQ(tests.size(), 2u);
  EXPECT_EQ(tests[0].id, 1u);
  EXPECT_EQ(tests[1].id, 3u);
}

TEST(CoverageArchive, IgnoresEdgesBeyondTheGoals) {
  CoverageArchive a(1);
  std::vector<uint64_t> hits = {0, 5};
  EXPECT_EQ(a.Update(Sized(1, 1), hits), 0u);
  EXPECT_EQ(a.covered(), 0u);
}

TEST(RunSearch, RejectsNonPositiveBudget) {
  ThreadedExecutor ex(BuiltinManifest("arith"));
  SearchConfig c;
  c.budget = 0ms;
  EXPECT_THROW(RunSearch(c, ex, ExecutionModel::kThreaded), ValidationError);
}

TEST(RunSearch, TargetWithoutGoalsIsFullyCovered) {
  TargetManifest m = Subset(BuiltinManifest("arith"), {"noop"});
  m.coverage_edges = 0;
  ThreadedExecutor ex(m);
  SearchConfig c;
  c.budget = 10s;
  c.max_executions = 30;
  SearchOutcome out = RunSearch(c, ex, ExecutionModel::kThreaded);
  EXPECT_EQ(out.executions, 30u);
  EXPECT_DOUBLE_EQ(out.Coverage(), 1.0);
  ASSERT_EQ(out.timeline.size(), 30u);
  for (const auto& p : out.timeline) {
    EXPECT_EQ(p.covered, 0u);
    EXPECT_EQ(p.total, 0u);
  }
  EXPECT_FALSE(out.final_suite.empty());
  std::set<std::string> distinct;
  for (const auto& tc : out.final_suite) distinct.insert(SerializeTestCase(tc));
  EXPECT_EQ(distinct.size(), out.final_suite.size());
}

TEST(RunSearch, CoverageOverTimeNeverDecreases) {
  ThreadedExecutor ex(BuiltinManifest("branchy"));
  SearchConfig c;
  c.budget = 10s;
  c.max_executions = 400;
  SearchOutcome out = RunSearch(c, ex, ExecutionModel::kThreaded);
  ASSERT_EQ(out.timeline.size(), out.executions);
  for (size_t i = 1; i < out.timeline.size(); ++i) {
    EXPECT_GE(out.timeline[i].covered, out.timeline[i - 1].covered);
    EXPECT_GE(out.timeline[i].elapsed_ms, out.timeline[i - 1].elapsed_ms);
  }
  EXPECT_EQ(out.timeline.back().covered, out.covered);
  EXPECT_GT(out.covered, 0u);
}

TEST(RunSearch, DeterministicForAFixedExecutionCount) {
  auto run = [] {
    ThreadedExecutor ex(BuiltinManifest("branchy"));
    SearchConfig c;
    c.budget = 60s;
    c.seed = 17;
    c.max_executions = 200;
    return RunSearch(c, ex, ExecutionModel::kThreaded);
  };
  SearchOutcome a = run(), b = run();
  EXPECT_EQ(a.final_suite, b.final_suite);
  EXPECT_EQ(a.covered, b.covered);
  EXPECT_EQ(a.managed_errors, b.managed_errors);
  ASSERT_EQ(a.timeline.size(), b.timeline.size());
  for (size_t i = 0; i < a.timeline.size(); ++i) {
    EXPECT_EQ(a.timeline[i].covered, b.timeline[i].covered);
  }
}

TEST(RunSearch, SuiteTestsAreValidAndShortest) {
  TargetManifest m = BuiltinManifest("branchy");
  ThreadedExecutor ex(m);
  SearchConfig c;
  c.budget = 10s;
  c.max_executions = 300;
  c.max_len = 6;
  SearchOutcome out = RunSearch(c, ex, ExecutionModel::kThreaded);
  for (const auto& tc : out.final_suite) {
    EXPECT_TRUE(::isoharness::testing::Violations(tc, m, 6).empty());
  }
}

TEST(RunSearch, ObserversSeeEveryExecution) {
  ThreadedExecutor ex(BuiltinManifest("arith"));
  SearchStatistics stats;
  MainObserver* obs[] = {&stats};
  SearchConfig c;
  c.budget = 10s;
  c.max_executions = 50;
  SearchOutcome out = RunSearch(c, ex, ExecutionModel::kThreaded, obs);
  EXPECT_EQ(stats.executions(), out.executions);
  EXPECT_EQ(stats.count(ExecStatus::kManagedError), out.managed_errors);
}

TEST(RunSearch, SubprocessQueuesCrashesAndKeepsThemOutOfTheSuite) {
  TargetManifest m = FixtureManifest();
  SubprocessExecutor ex(m);
  SearchConfig c;
  c.budget = 120s;
  c.max_executions = 80;
  c.per_test_timeout = 200ms;
  c.seed = 3;
  SearchOutcome out = RunSearch(c, ex, ExecutionModel::kSubprocess);
  EXPECT_EQ(out.executions, 80u);
  ASSERT_FALSE(out.crash_queue.empty());
  uint64_t timeouts = 0;
  for (const auto& cand : out.crash_queue) {
    EXPECT_TRUE(cand.result.fatal());
    EXPECT_FALSE(cand.injected);
    timeouts += cand.result.timed_out();
  }
  EXPECT_EQ(timeouts, out.timeouts);
  std::set<std::string> crashing;
  for (const auto& cand : out.crash_queue) {
    crashing.insert(SerializeTestCase(cand.testcase));
  }
  for (const auto& tc : out.final_suite) {
    EXPECT_EQ(crashing.count(SerializeTestCase(tc)), 0u);
    ExecutionRequest req;
    req.testcase = &tc;
    req.timeout = 2s;
    EXPECT_FALSE(ex.Execute(req, nullptr).fatal()) << RenderTestCase(tc);
  }
}

TEST(RunSearch, InjectionMarksEveryQueuedFault) {
  TargetManifest m = Subset(BuiltinManifest("arith"), {"noop", "add", "sub", "mul"});
  SubprocessExecutor ex(m);
  SearchConfig c;
  c.budget = 120s;
  c.max_executions = 60;
  c.injection.rate = 0.2;
  SearchOutcome out = RunSearch(c, ex, ExecutionModel::kSubprocess);
  EXPECT_EQ(out.crash_queue.size(), out.injected_faults);
  for (const auto& cand : out.crash_queue) {
    EXPECT_TRUE(cand.injected);
    EXPECT_EQ(cand.result.exit_code, -11);
  }
}

TEST(RunSearch, InjectOnceFiresAtMostOnce) {
  TargetManifest m = Subset(BuiltinManifest("arith"), {"noop", "add"});
  SubprocessExecutor ex(m);
  SearchConfig c;
  c.budget = 120s;
  c.max_executions = 10;
  c.injection.rate = 1.0;
  c.injection.once = true;
  SearchOutcome out = RunSearch(c, ex, ExecutionModel::kSubprocess);
  EXPECT_EQ(out.injected_faults, 1u);
  EXPECT_EQ(out.crash_queue.size(), 1u);
}

TEST(SearchOutcomeJson, RoundTrips) {
  ThreadedExecutor ex(BuiltinManifest("branchy"));
  SearchConfig c;
  c.budget = 10s;
  c.max_executions = 50;
  SearchOutcome out = RunSearch(c, ex, ExecutionModel::kThreaded);
  CrashCandidate cand;
  cand.testcase = MakeTest({Call("acc_new")}, 9);
  cand.result.status = ExecStatus::kCrashed;
  cand.result.signal_number = 11;
  cand.result.exit_code = -11;
  cand.result.last_statement = StatementLocator{"acc_new", 0};
  cand.injected = true;
  out.crash_queue.push_back(cand);
  out.tainted_abort = true;
  SearchOutcome back = SearchOutcomeFromJson(SearchOutcomeToJson(out));
  EXPECT_EQ(back.final_suite, out.final_suite);
  EXPECT_EQ(back.timeline, out.timeline);
  EXPECT_EQ(back.executions, out.executions);
  EXPECT_EQ(back.covered, out.covered);
  EXPECT_EQ(back.total, out.total);
  EXPECT_EQ(back.tainted_abort, true);
  ASSERT_EQ(back.crash_queue.size(), 1u);
  EXPECT_EQ(back.crash_queue[0].testcase, cand.testcase);
  EXPECT_EQ(back.crash_queue[0].result.exit_code, -11);
  EXPECT_EQ(back.crash_queue[0].result.last_statement, cand.result.last_statement);
  EXPECT_TRUE(back.crash_queue[0].injected);
}

TEST(TimelineCsv, HeaderAndRows) {
  std::vector<TimelinePoint> t = {{0, 1, 4}, {15, 3, 4}};
  EXPECT_EQ(TimelineCsv(t), "elapsed_ms,covered,total\n0,1,4\n15,3,4\n");
}

}  // namespace
}  // namespace isoharness
