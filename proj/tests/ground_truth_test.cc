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

#include "isoharness/ground_truth.h"

#include <gtest/gtest.h>

#include <fstream>

#include "isoharness/error.h"
#include "isoharness/executor.h"
#include "isoharness/search.h"
#include "test_support.h"

namespace isoharness {
namespace {

using ::isoharness::testing::Call;
using ::isoharness::testing::FixtureManifest;
using ::isoharness::testing::MakeTest;
using ::isoharness::testing::TempDir;
using namespace std::chrono_literals;

constexpr char kFaultsPath[] = ISOH_FIXTURE_FAULTS;

std::string Minimal(const std::string& extra_fault_key = "",
                    const std::string& extra_top_key = "") {
  return R"({"schema": 1, "target_id": "t", )" + extra_top_key +
         R"("faults": [{"site": "f", "trigger": "x", )" + extra_fault_key +
         R"("expected_exit_code": null, "witness": {"schema": 1, "id": 1,
         "seed": 0, "statements": [{"callee": "f", "args": []}]}}]})";
}

TEST(GroundTruth, ParsesTheFixtureSidecar) {
  GroundTruth g = LoadGroundTruth(kFaultsPath);
  EXPECT_EQ(g.target_id, "seeded_fixture");
  std::set<FaultSite> expected = {{"crash_segv", -11},
                                  {"checked_abort", -6},
                                  {"fpe_div", -8},
                                  {"use_state", -11},
                                  {"spin_forever", std::nullopt}};
  EXPECT_EQ(FaultSites(g), expected);
  EXPECT_EQ(g.faults[3].witness.statements.size(), 3u);
  EXPECT_EQ(g.faults[3].witness.statements[1].args[1], Arg(EnumArg{3}));
}

TEST(GroundTruth, RoundTrips) {
  GroundTruth g = LoadGroundTruth(kFaultsPath);
  std::string text = SerializeGroundTruth(g);
  EXPECT_EQ(ParseGroundTruth(text), g);
  EXPECT_EQ(SerializeGroundTruth(ParseGroundTruth(text)), text);

  TempDir dir;
  auto path = dir.path() / "faults.json";
  std::ofstream(path) << text;
  EXPECT_EQ(LoadGroundTruth(path), g);
}

TEST(GroundTruth, RejectsMalformedInput) {
  EXPECT_NO_THROW(ParseGroundTruth(Minimal()));
  EXPECT_THROW(ParseGroundTruth("{"), ParseError);
  EXPECT_THROW(ParseGroundTruth("[]"), ParseError);
  EXPECT_THROW(ParseGroundTruth(Minimal(R"("note": 1, )")), ParseError);
  EXPECT_THROW(ParseGroundTruth(Minimal("", R"("note": 1, )")), ParseError);
  std::string bad_schema = Minimal();
  bad_schema.replace(bad_schema.find("\"schema\": 1"), 11, "\"schema\": 2");
  EXPECT_THROW(ParseGroundTruth(bad_schema), ParseError);
  std::string no_site = Minimal();
  no_site.replace(no_site.find("\"site\""), 6, "\"sight\"");
  EXPECT_THROW(ParseGroundTruth(no_site), ParseError);
  std::string bad_witness = Minimal();
  bad_witness.replace(bad_witness.find("\"args\": []"), 10, "\"args\": 3");
  EXPECT_THROW(ParseGroundTruth(bad_witness), ParseError);
  EXPECT_THROW(LoadGroundTruth("/nonexistent/faults.json"), IoError);
}

TEST(GroundTruth, EveryWitnessFaultsAtItsSite) {
  TargetManifest m = FixtureManifest();
  GroundTruth g = LoadGroundTruth(kFaultsPath);
  SubprocessExecutor ex(m);
  for (const SeededFault& f : g.faults) {
    SCOPED_TRACE(f.site);
    ASSERT_TRUE(CheckTestCase(f.witness, m, kDefaultMaxLen).empty());
    ExecutionRequest req;
    req.testcase = &f.witness;
    req.timeout = 300ms;
    ExecutionResult r = ex.Execute(req, nullptr);
    ASSERT_TRUE(r.fatal());
    EXPECT_EQ(r.exit_code, f.expected_exit_code);
    ASSERT_TRUE(r.last_statement.has_value());
    EXPECT_EQ(r.last_statement->callee_symbol, f.site);
    EXPECT_EQ(r.last_statement->statement_index, f.witness.statements.size() - 1);
  }
}

TEST(GroundTruth, SearchFindsOnlySeededCauses) {
  TargetManifest m = FixtureManifest();
  GroundTruth g = LoadGroundTruth(kFaultsPath);
  SubprocessExecutor ex(m);
  SearchConfig c;
  c.budget = 120s;
  c.max_executions = 100;
  c.per_test_timeout = 200ms;
  c.seed = 11;
  SearchOutcome out = RunSearch(c, ex, ExecutionModel::kSubprocess);
  ASSERT_FALSE(out.crash_queue.empty());
  ConfirmOptions opts;
  opts.replay_runs = 2;
  opts.replay_timeout = 200ms;
  auto reports = Confirm(out.crash_queue, ex, opts);
  auto causes = Dedupe(reports);
  ASSERT_FALSE(causes.empty());
  std::set<FaultSite> found = FaultSites(causes);
  std::set<FaultSite> seeded = FaultSites(g);
  for (const FaultSite& site : found) {
    EXPECT_EQ(seeded.count(site), 1u)
        << site.first << " " << (site.second ? *site.second : 0);
  }
}

}  // namespace
}  // namespace isoharness
