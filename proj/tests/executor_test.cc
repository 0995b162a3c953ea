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

#include "isoharness/executor.h"

#include <dlfcn.h>
#include <signal.h>
#include <unistd.h>

#include <gtest/gtest.h>

#include "isoharness/error.h"
#include "test_support.h"

namespace isoharness {
namespace {

using ::isoharness::testing::Call;
using ::isoharness::testing::FixtureManifest;
using ::isoharness::testing::MakeTest;
using ::isoharness::testing::Subset;
using namespace std::chrono_literals;

ExecutionRequest Request(const TestCase& tc,
                         std::chrono::milliseconds timeout = 10'000ms) {
  ExecutionRequest r;
  r.testcase = &tc;
  r.timeout = timeout;
  return r;
}

std::vector<uint64_t> Hits(std::initializer_list<size_t> edges, size_t total) {
  std::vector<uint64_t> out(total, 0);
  for (size_t e : edges) ++out[e];
  return out;
}

TEST(Threaded, CompletesAManagedCall) {
  ThreadedExecutor ex(BuiltinManifest("arith"));
  TestCase tc = MakeTest({Call("add", {IntArg{2}, IntArg{3}})});
  ExecutionResult r = ex.Execute(Request(tc), nullptr);
  EXPECT_EQ(r.status, ExecStatus::kCompleted);
  EXPECT_EQ(r.exit_code, 0);
  ASSERT_TRUE(r.last_statement);
  EXPECT_EQ(*r.last_statement, (StatementLocator{"add", 0}));
  EXPECT_EQ(r.per_statement_status,
            std::vector<StatementStatus>{StatementStatus::kOk});
}

TEST(Threaded, ManagedErrorStopsTheTest) {
  ThreadedExecutor ex(FixtureManifest());
  TestCase tc = MakeTest({Call("checked_abort", {IntArg{5}}),
                          Call("validated_sum", {NullArg{}}),
                          Call("validated_sum", {BytesArg{{1}}})});
  ExecutionResult r = ex.Execute(Request(tc), nullptr);
  EXPECT_EQ(r.status, ExecStatus::kManagedError);
  EXPECT_EQ(r.managed_code, 1);
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_EQ(*r.last_statement, (StatementLocator{"validated_sum", 1}));
  EXPECT_EQ(r.per_statement_status,
            (std::vector<StatementStatus>{StatementStatus::kOk,
                                          StatementStatus::kManagedError,
                                          StatementStatus::kNotRun}));
  EXPECT_EQ(r.edge_hits, Hits({2, 12}, 24));
}

TEST(Threaded, ExactEdgePathOfValidatedSum) {
  ThreadedExecutor ex(FixtureManifest());
  TestCase tc = MakeTest({Call("validated_sum", {BytesArg{{0x00, 0x41}}})});
  ExecutionResult r = ex.Execute(Request(tc), nullptr);
  EXPECT_EQ(r.status, ExecStatus::kCompleted);
  EXPECT_EQ(r.edge_hits, Hits({13, 14, 16, 21}, 24));
}

TEST(Threaded, CountersResetBetweenExecutions) {
  ThreadedExecutor ex(FixtureManifest());
  TestCase tc = MakeTest({Call("validated_sum", {NullArg{}})});
  ex.Execute(Request(tc), nullptr);
  ExecutionResult r = ex.Execute(Request(tc), nullptr);
  EXPECT_EQ(r.edge_hits, Hits({12}, 24));
}

TEST(Threaded, OutOfRangeEdgeIsDropped) {
  ThreadedExecutor ex(FixtureManifest());
  TestCase tc = MakeTest({Call("stray_edge")});
  ExecutionResult r = ex.Execute(Request(tc), nullptr);
  EXPECT_EQ(r.status, ExecStatus::kCompleted);
  EXPECT_EQ(r.edge_hits, std::vector<uint64_t>(24, 0));
}

TEST(Threaded, SetupHookRunsOnLoad) {
  TargetManifest m = FixtureManifest();
  ThreadedExecutor ex(m);
  void* lib = dlopen(m.artifact_path.c_str(), RTLD_NOW | RTLD_NOLOAD);
  ASSERT_NE(lib, nullptr);
  auto fn = reinterpret_cast<isoh_entry_fn>(dlsym(lib, "setup_count"));
  ASSERT_NE(fn, nullptr);
  isoh_value ret{};
  fn(nullptr, 0, &ret);
  EXPECT_GE(ret.i, 1);
  dlclose(lib);
}

TEST(Threaded, RejectsInvalidTests) {
  ThreadedExecutor ex(FixtureManifest());
  TestCase tc = MakeTest({Call("use_state", {VarRef{0}, IntArg{1}})});
  EXPECT_THROW(ex.Execute(Request(tc), nullptr), ValidationError);
}

TEST(Threaded, MissingLibraryIsALoadError) {
  TargetManifest m = FixtureManifest();
  m.artifact_path = "/nonexistent/libnothing.so";
  EXPECT_THROW(ThreadedExecutor{m}, LoadError);
}

TEST(ThreadedDeathTest, NativeCrashTakesDownTheProcess) {
  EXPECT_EXIT(
      {
        ThreadedExecutor ex(FixtureManifest());
        TestCase tc = MakeTest({Call("crash_segv")});
        ex.Execute(Request(tc), nullptr);
        _exit(0);
      },
      ::testing::KilledBySignal(SIGSEGV), "");
}

// Exit status 0 iff a threaded timeout is reported and taints the executor.
[[noreturn]] void RunThreadedTimeout() {
  ThreadedExecutor ex(FixtureManifest());
  TestCase tc = MakeTest({Call("validated_sum", {BytesArg{}}),
                          Call("spin_forever")});
  ExecutionResult r = ex.Execute(Request(tc, 300ms), nullptr);
  bool ok = r.timed_out() && !r.exit_code && ex.tainted() &&
            ex.consecutive_taints() == 1 && r.last_statement &&
            *r.last_statement == StatementLocator{"spin_forever", 1} &&
            r.edge_hits[11] == 1 && r.wall_time >= 300ms && r.wall_time < 5s;
  _exit(ok ? 0 : 1);
}

// The runaway thread is abandoned, so run this in a child process.
TEST(ThreadedDeathTest, TimeoutTaintsTheExecutor) {
  EXPECT_EXIT(RunThreadedTimeout(), ::testing::ExitedWithCode(0), "");
}

TEST(SyntheticFault, OnlyFatalSignalsAreSupported) {
  for (int s : {SIGILL, SIGABRT, SIGBUS, SIGFPE, SIGSEGV}) {
    EXPECT_TRUE(IsSupportedFaultSignal(s)) << s;
  }
  for (int s : {0, SIGKILL, SIGTERM, SIGINT, SIGUSR1}) {
    EXPECT_FALSE(IsSupportedFaultSignal(s)) << s;
  }
  TestCase tc = MakeTest({Call("noop")});
  EXPECT_THROW(ValidateSyntheticFault({0, 0}, tc), UnsupportedSignal);
  EXPECT_THROW(ValidateSyntheticFault({SIGSEGV, 1}, tc), ValidationError);
  EXPECT_NO_THROW(ValidateSyntheticFault({SIGSEGV, 0}, tc));
}

class SubprocessTest : public ::testing::Test {
 protected:
  SubprocessExecutor& Fixture() {
    if (!fixture_) fixture_ = std::make_unique<SubprocessExecutor>(FixtureManifest());
    return *fixture_;
  }
  std::unique_ptr<SubprocessExecutor> fixture_;
};

TEST_F(SubprocessTest, CompletesAManagedCall) {
  SubprocessExecutor ex(BuiltinManifest("arith"));
  TestCase tc = MakeTest({Call("add", {IntArg{2}, IntArg{3}})});
  ExecutionResult r = ex.Execute(Request(tc), nullptr);
  EXPECT_EQ(r.status, ExecStatus::kCompleted);
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_EQ(*r.last_statement, (StatementLocator{"add", 0}));
}

TEST_F(SubprocessTest, SyntheticFaultBeforeFirstStatementHasNoLocator) {
  SubprocessExecutor ex(BuiltinManifest("arith"));
  TestCase tc = MakeTest({Call("noop"), Call("noop")});
  ExecutionRequest req = Request(tc);
  req.synthetic_fault = SyntheticFault{SIGSEGV, 0};
  ExecutionResult r = ex.Execute(req, nullptr);
  EXPECT_EQ(r.status, ExecStatus::kCrashed);
  EXPECT_EQ(r.signal_number, SIGSEGV);
  EXPECT_EQ(r.exit_code, -SIGSEGV);
  EXPECT_FALSE(r.last_statement);
  EXPECT_EQ(r.per_statement_status,
            std::vector<StatementStatus>(2, StatementStatus::kNotRun));
}

TEST_F(SubprocessTest, SyntheticFaultBlamesThePrecedingStatement) {
  SubprocessExecutor ex(BuiltinManifest("arith"));
  TestCase tc = MakeTest({Call("noop"), Call("add", {IntArg{1}, IntArg{1}}),
                          Call("noop")});
  ExecutionRequest req = Request(tc);
  req.synthetic_fault = SyntheticFault{SIGABRT, 2};
  ExecutionResult r = ex.Execute(req, nullptr);
  EXPECT_EQ(r.exit_code, -SIGABRT);
  ASSERT_TRUE(r.last_statement);
  EXPECT_EQ(*r.last_statement, (StatementLocator{"add", 1}));
}

TEST_F(SubprocessTest, UnsupportedSyntheticSignalIsRejected) {
  SubprocessExecutor ex(BuiltinManifest("arith"));
  TestCase tc = MakeTest({Call("noop")});
  ExecutionRequest req = Request(tc);
  req.synthetic_fault = SyntheticFault{0, 0};
  EXPECT_THROW(ex.Execute(req, nullptr), UnsupportedSignal);
}

TEST_F(SubprocessTest, NativeFaultsAreContained) {
  struct Case {
    TestCase tc;
    int exit_code;
    StatementLocator where;
    std::vector<size_t> edges;
  };
  std::vector<Case> cases = {
      {MakeTest({Call("crash_segv")}), -SIGSEGV, {"crash_segv", 0}, {0}},
      {MakeTest({Call("checked_abort", {IntArg{0}}),
                 Call("checked_abort", {IntArg{-1}})}),
       -SIGABRT, {"checked_abort", 1}, {2, 1}},
      {MakeTest({Call("fpe_div", {IntArg{5}, IntArg{0}})}), -SIGFPE,
       {"fpe_div", 0}, {3, 4}},
      {MakeTest({Call("make_state"), Call("set_mode", {VarRef{0}, EnumArg{3}}),
                 Call("use_state", {VarRef{0}, IntArg{4}})}),
       -SIGSEGV, {"use_state", 2}, {5, 7, 9}},
  };
  for (const auto& c : cases) {
    ExecutionResult r = Fixture().Execute(Request(c.tc), nullptr);
    EXPECT_EQ(r.status, ExecStatus::kCrashed);
    EXPECT_EQ(r.exit_code, c.exit_code);
    ASSERT_TRUE(r.last_statement);
    EXPECT_EQ(*r.last_statement, c.where);
    std::vector<uint64_t> want(24, 0);
    for (size_t e : c.edges) ++want[e];
    EXPECT_EQ(r.edge_hits, want);
  }
}

TEST_F(SubprocessTest, StateDependentFaultNeedsMode3) {
  TestCase tc = MakeTest({Call("make_state"),
                          Call("set_mode", {VarRef{0}, EnumArg{2}}),
                          Call("use_state", {VarRef{0}, IntArg{4}})});
  ExecutionResult r = Fixture().Execute(Request(tc), nullptr);
  EXPECT_EQ(r.status, ExecStatus::kCompleted);
  EXPECT_EQ(r.edge_hits, Hits({5, 7, 10}, 24));
}

TEST_F(SubprocessTest, TimeoutKillsTheWorker) {
  TestCase tc = MakeTest({Call("validated_sum", {BytesArg{}}),
                          Call("spin_forever")});
  ExecutionResult r = Fixture().Execute(Request(tc, 300ms), nullptr);
  EXPECT_EQ(r.status, ExecStatus::kTimedOut);
  EXPECT_FALSE(r.exit_code);
  ASSERT_TRUE(r.last_statement);
  EXPECT_EQ(*r.last_statement, (StatementLocator{"spin_forever", 1}));
  EXPECT_EQ(r.per_statement_status,
            (std::vector<StatementStatus>{StatementStatus::kOk,
                                          StatementStatus::kTimedOut}));
  EXPECT_EQ(r.edge_hits, Hits({13, 18, 20, 11}, 24));
  EXPECT_GE(r.wall_time, 300ms);
  EXPECT_LT(r.wall_time, 10s);
  EXPECT_EQ(kill(Fixture().last_worker_pid(), 0), -1);
}

TEST_F(SubprocessTest, EachTestGetsAFreshWorker) {
  TestCase tc = MakeTest({Call("setup_count")});
  Fixture().Execute(Request(tc), nullptr);
  pid_t first = Fixture().last_worker_pid();
  Fixture().Execute(Request(tc), nullptr);
  EXPECT_NE(first, Fixture().last_worker_pid());
  EXPECT_GT(first, 0);
}

TEST_F(SubprocessTest, TargetOutputDoesNotCorruptTheReply) {
  TestCase tc = MakeTest({Call("chatty"), Call("chatty")});
  ExecutionResult r = Fixture().Execute(Request(tc), nullptr);
  EXPECT_EQ(r.status, ExecStatus::kCompleted);
  EXPECT_EQ(r.edge_hits[23], 2u);
}

TEST_F(SubprocessTest, PayloadsCrossTheProcessBoundary) {
  TestCase tc = MakeTest({Call("setup_count"), Call("validated_sum", {NullArg{}})});
  ExecutionRequest req = Request(tc);
  req.remote_observers = {{"call_census", nlohmann::json::object()}};
  std::vector<ObservationPayload> payloads;
  ExecutionResult r = Fixture().Execute(req, &payloads);
  EXPECT_EQ(r.status, ExecStatus::kManagedError);
  ASSERT_EQ(payloads.size(), 1u);
  EXPECT_EQ(payloads[0]["calls"]["setup_count"], 1);
  EXPECT_EQ(payloads[0]["errors"], 1);
}

TEST_F(SubprocessTest, LoadFailureIsReportedAsLoadError) {
  TargetManifest m = FixtureManifest();
  m.artifact_path = "/nonexistent/libnothing.so";
  SubprocessExecutor ex(m);
  TestCase tc = MakeTest({Call("crash_segv")});
  EXPECT_THROW(ex.Execute(Request(tc), nullptr), LoadError);
}

TEST_F(SubprocessTest, MissingWorkerBinaryIsASpawnError) {
  SubprocessOptions opts;
  opts.worker_path = "/nonexistent/isoharness";
  SubprocessExecutor ex(BuiltinManifest("arith"), opts);
  TestCase tc = MakeTest({Call("noop")});
  EXPECT_THROW(ex.Execute(Request(tc), nullptr), WorkerSpawnError);
}

// Both models agree on every result of a crash-free target.
TEST(ModelEquivalence, SameResultsOnCrashFreeTests) {
  TargetManifest m = Subset(FixtureManifest(),
                            {"make_state", "set_mode", "use_state",
                             "validated_sum", "checked_abort"});
  m.functions[1].params[1].values = {0, 1, 2};
  m.functions[4].params[0].int_min = 0;
  ThreadedExecutor threaded(m);
  SubprocessExecutor subprocess(m);
  for (uint64_t seed = 0; seed < 25; ++seed) {
    TestCase tc = RandomTest(m, seed);
    ExecutionResult a = threaded.Execute(Request(tc), nullptr);
    ExecutionResult b = subprocess.Execute(Request(tc), nullptr);
    ASSERT_EQ(a.status, b.status) << RenderTestCase(tc);
    EXPECT_EQ(a.managed_code, b.managed_code);
    EXPECT_EQ(a.exit_code, b.exit_code);
    EXPECT_EQ(a.edge_hits, b.edge_hits);
    EXPECT_EQ(a.last_statement, b.last_statement);
    EXPECT_EQ(a.per_statement_status, b.per_statement_status);
  }
}

TEST(ResultJson, RoundTrips) {
  ExecutionResult r;
  r.status = ExecStatus::kCrashed;
  r.signal_number = SIGBUS;
  r.exit_code = -SIGBUS;
  r.edge_hits = {1, 0, 3};
  r.last_statement = StatementLocator{"f", 2};
  r.per_statement_status = {StatementStatus::kOk, StatementStatus::kOk,
                            StatementStatus::kCrashed};
  ExecutionResult back = ResultFromJson(ResultToJson(r, true));
  EXPECT_EQ(back.status, r.status);
  EXPECT_EQ(back.signal_number, r.signal_number);
  EXPECT_EQ(back.exit_code, r.exit_code);
  EXPECT_EQ(back.edge_hits, r.edge_hits);
  EXPECT_EQ(back.last_statement, r.last_statement);
  EXPECT_EQ(back.per_statement_status, r.per_statement_status);
  EXPECT_TRUE(ResultFromJson(ResultToJson(r, false)).edge_hits.empty());
}

}  // namespace
}  // namespace isoharness
