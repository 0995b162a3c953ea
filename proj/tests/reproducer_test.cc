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

#include "isoharness/reproducer.h"

#include <gtest/gtest.h>

#include "isoharness/error.h"
#include "test_support.h"

namespace isoharness {
namespace {

using ::isoharness::testing::Call;
using ::isoharness::testing::FixtureManifest;
using ::isoharness::testing::MakeTest;
using namespace std::chrono_literals;

Reproducer Sample() {
  ExecutionResult r;
  r.status = ExecStatus::kCrashed;
  r.exit_code = -11;
  r.last_statement = StatementLocator{"crash_segv", 1};
  return MakeReproducer(FixtureManifest(),
                        MakeTest({Call("setup_count"), Call("crash_segv")}, 5), r);
}

TEST(Reproducer, CapturesTargetAndOutcome) {
  Reproducer r = Sample();
  EXPECT_EQ(r.target_id, "seeded_fixture");
  EXPECT_EQ(r.manifest_hash, ManifestHash(FixtureManifest()));
  EXPECT_EQ(r.manifest_hash.size(), 16u);
  EXPECT_EQ(r.expected_exit_code, -11);
}

TEST(Reproducer, RoundTripsThroughText) {
  Reproducer r = Sample();
  std::string text = SerializeReproducer(r);
  EXPECT_EQ(text.back(), '\n');
  EXPECT_EQ(ParseReproducer(text), r);
  EXPECT_EQ(SerializeReproducer(ParseReproducer(text)), text);
  r.expected_exit_code.reset();
  r.expected_locator.reset();
  EXPECT_EQ(ParseReproducer(SerializeReproducer(r)), r);
}

TEST(Reproducer, TimeoutIsEncodedAsNull) {
  Reproducer r = Sample();
  r.expected_exit_code.reset();
  auto j = nlohmann::json::parse(SerializeReproducer(r));
  EXPECT_TRUE(j["expected_exit_code"].is_null());
  EXPECT_EQ(j["schema"], 1);
}

TEST(Reproducer, RejectsMalformedText) {
  std::string good = SerializeReproducer(Sample());
  EXPECT_THROW(ParseReproducer("{"), DecodeError);
  EXPECT_THROW(ParseReproducer("[]"), DecodeError);
  auto j = nlohmann::json::parse(good);
  j["extra"] = 1;
  EXPECT_THROW(ParseReproducer(j.dump()), DecodeError);
  j = nlohmann::json::parse(good);
  j["schema"] = 2;
  EXPECT_THROW(ParseReproducer(j.dump()), DecodeError);
  j = nlohmann::json::parse(good);
  j.erase("testcase");
  EXPECT_THROW(ParseReproducer(j.dump()), DecodeError);
}

TEST(Reproducer, BoundToOneTargetBuild) {
  Reproducer r = Sample();
  EXPECT_NO_THROW(CheckReproducerTarget(r, FixtureManifest()));
  TargetManifest other = FixtureManifest();
  other.coverage_edges = 25;
  EXPECT_THROW(CheckReproducerTarget(r, other), HashMismatch);
  EXPECT_THROW(CheckReproducerTarget(r, BuiltinManifest("arith")), HashMismatch);
}

TEST(Reproducer, DescribesExitCodes) {
  EXPECT_EQ(DescribeExitCode(-11), "signal 11");
  EXPECT_EQ(DescribeExitCode(0), "exit 0");
  EXPECT_EQ(DescribeExitCode(std::nullopt), "timeout");
}

TEST(ReplayReproducer, ReproducesAFixtureCrash) {
  SubprocessExecutor ex(FixtureManifest());
  Reproducer r = Sample();
  ReplayVerdict v = ReplayReproducer(r, ex, 5s);
  EXPECT_TRUE(v.reproduced);
  EXPECT_EQ(v.summary, "reproduced: signal 11");
}

TEST(ReplayReproducer, ReportsADifferentOutcome) {
  SubprocessExecutor ex(FixtureManifest());
  Reproducer r = Sample();
  r.expected_locator = StatementLocator{"setup_count", 0};
  ReplayVerdict v = ReplayReproducer(r, ex, 5s);
  EXPECT_FALSE(v.reproduced);
  EXPECT_EQ(v.summary,
            "not reproduced: expected signal 11 at setup_count#0, observed "
            "signal 11 at crash_segv#1");
}

TEST(ReplayReproducer, ReproducesACleanRunAndATimeout) {
  SubprocessExecutor ex(FixtureManifest());
  TestCase clean = MakeTest({Call("validated_sum", {BytesArg{{2}}})});
  ExecutionResult ok;
  ok.exit_code = 0;
  ok.last_statement = StatementLocator{"validated_sum", 0};
  EXPECT_TRUE(ReplayReproducer(MakeReproducer(FixtureManifest(), clean, ok), ex, 5s)
                  .reproduced);

  TestCase spin = MakeTest({Call("spin_forever")});
  ExecutionResult to;
  to.status = ExecStatus::kTimedOut;
  to.last_statement = StatementLocator{"spin_forever", 0};
  ReplayVerdict v =
      ReplayReproducer(MakeReproducer(FixtureManifest(), spin, to), ex, 300ms);
  EXPECT_TRUE(v.reproduced);
  EXPECT_EQ(v.summary, "reproduced: timeout");
}

TEST(ReplayReproducer, RefusesAForeignTarget) {
  SubprocessExecutor ex(BuiltinManifest("arith"));
  EXPECT_THROW(ReplayReproducer(Sample(), ex, 5s), HashMismatch);
}

}  // namespace
}  // namespace isoharness
