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

#include "isoharness/manifest.h"

#include <gtest/gtest.h>

#include "isoharness/error.h"
#include "isoharness/util.h"
#include "test_support.h"

namespace isoharness {
namespace {

using ::isoharness::testing::FixtureManifest;
using ::isoharness::testing::TempDir;

constexpr char kMinimal[] = R"({
  "schema": 1, "target_id": "tiny", "artifact_path": "builtin:arith",
  "hazard": "managed", "whitelisted": false, "coverage_edges": 0,
  "functions": [{"symbol": "noop", "params": [], "returns": {"kind": "void"},
                 "hazard": "managed"}]
})";

std::string WithReplacement(std::string text, const std::string& from,
                            const std::string& to) {
  auto pos = text.find(from);
  if (pos == std::string::npos) throw std::logic_error("no " + from);
  return text.replace(pos, from.size(), to);
}

TEST(Manifest, MinimalZeroArgManagedFunction) {
  TargetManifest m = ParseManifest(kMinimal);
  EXPECT_EQ(m.target_id, "tiny");
  ASSERT_EQ(m.functions.size(), 1u);
  EXPECT_EQ(m.hazard, Hazard::kManaged);
  EXPECT_EQ(m.coverage_edges, 0u);
  EXPECT_TRUE(m.IsBuiltin());
  EXPECT_EQ(m.BuiltinName(), "arith");
}

TEST(Manifest, RoundTripThroughCanonicalText) {
  TargetManifest fixture = FixtureManifest();
  EXPECT_EQ(ParseManifest(SerializeManifest(fixture)), fixture);
  TargetManifest tiny = ParseManifest(kMinimal);
  EXPECT_EQ(ParseManifest(SerializeManifest(tiny)), tiny);
  EXPECT_EQ(SerializeManifest(ParseManifest(SerializeManifest(tiny))),
            SerializeManifest(tiny));
}

TEST(Manifest, IdenticalBytesGiveIdenticalManifests) {
  EXPECT_EQ(ParseManifest(kMinimal), ParseManifest(kMinimal));
}

TEST(Manifest, FixtureLoadsAllDeclaredFunctions) {
  TargetManifest m = FixtureManifest();
  EXPECT_EQ(m.functions.size(), 11u);
  EXPECT_EQ(m.hazard, Hazard::kNativeUnchecked);
  EXPECT_EQ(m.coverage_edges, 24u);
  EXPECT_TRUE(std::filesystem::path(m.artifact_path).is_absolute());
  ASSERT_NE(m.Find("use_state"), nullptr);
  EXPECT_EQ(m.Find("use_state")->params[0].type_tag, "State");
  EXPECT_EQ(m.Find("nope"), nullptr);
}

TEST(Manifest, DanglingHandleTagIsRejected) {
  std::string text = WithReplacement(
      kMinimal, R"("params": [])",
      R"("params": [{"kind": "handle", "nullable": false, "type_tag": "Matrix"}])");
  EXPECT_THROW(ParseManifest(text), ValidationError);
}

TEST(Manifest, UnknownKeysAreRejected) {
  std::string text =
      WithReplacement(kMinimal, R"("schema": 1,)", R"("schema": 1, "extra": 2,)");
  EXPECT_THROW(ParseManifest(text), ParseError);
}

TEST(Manifest, ForeignSchemaIsRejected) {
  EXPECT_THROW(ParseManifest(WithReplacement(kMinimal, R"("schema": 1)",
                                             R"("schema": 2)")),
               ParseError);
}

TEST(Manifest, MalformedTextIsAParseError) {
  EXPECT_THROW(ParseManifest("{not json"), ParseError);
  EXPECT_THROW(ParseManifest("[]"), ParseError);
}

TEST(Manifest, InvariantViolations) {
  // Duplicate symbol.
  std::string fn =
      R"({"symbol": "noop", "params": [], "returns": {"kind": "void"}, "hazard": "managed"})";
  EXPECT_THROW(ParseManifest(WithReplacement(kMinimal, R"("functions": [)",
                                             R"("functions": [)" + fn + ", ")),
               ValidationError);
  // Managed target with a native function.
  EXPECT_THROW(ParseManifest(WithReplacement(kMinimal, R"("hazard": "managed"})",
                                             R"("hazard": "native-unchecked"})")),
               ValidationError);
  // Instrumented library without edges.
  EXPECT_THROW(
      ParseManifest(WithReplacement(kMinimal, "builtin:arith", "/tmp/lib.so")),
      ValidationError);
  // min > max.
  EXPECT_THROW(ParseManifest(WithReplacement(
                   kMinimal, R"("params": [])",
                   R"("params": [{"kind": "int", "nullable": false, "min": 3, "max": 1}])")),
               ValidationError);
  // Empty enum.
  EXPECT_THROW(ParseManifest(WithReplacement(
                   kMinimal, R"("params": [])",
                   R"("params": [{"kind": "enum", "nullable": false, "values": []}])")),
               ValidationError);
}

TEST(Manifest, MoreThanSixteenParamsIsRejected) {
  std::string params = "[";
  for (int i = 0; i < 17; ++i) {
    params += std::string(i ? "," : "") +
              R"({"kind": "int", "nullable": false, "min": 0, "max": 1})";
  }
  params += "]";
  EXPECT_THROW(ParseManifest(WithReplacement(kMinimal, R"("params": [])",
                                             "\"params\": " + params)),
               ValidationError);
}

TEST(Manifest, LoadReportsMissingFile) {
  EXPECT_THROW(LoadManifest("/nonexistent/x.manifest"), IoError);
}

TEST(Manifest, RelativeArtifactResolvesAgainstManifestDirectory) {
  TempDir dir;
  std::string text = WithReplacement(
      WithReplacement(kMinimal, "builtin:arith", "lib/t.so"),
      R"("coverage_edges": 0)", R"("coverage_edges": 4)");
  text = WithReplacement(text, R"("hazard": "managed", "whitelisted")",
                         R"("hazard": "native-unchecked", "whitelisted")");
  WriteFile(dir.path() / "t.manifest", text);
  TargetManifest m = LoadManifest(dir.path() / "t.manifest");
  EXPECT_EQ(m.artifact_path, (dir.path() / "lib/t.so").string());
}

TEST(Manifest, ClassifyHazardTable) {
  TargetManifest managed = ParseManifest(kMinimal);
  TargetManifest native = FixtureManifest();
  EXPECT_EQ(ClassifyHazard(managed, {}), HazardClass::kPure);
  EXPECT_EQ(ClassifyHazard(native, {}), HazardClass::kNative);
  EXPECT_EQ(ClassifyHazard(native, {"seeded_fixture"}), HazardClass::kPure);
  EXPECT_EQ(ClassifyHazard(native, {"other"}), HazardClass::kNative);
  TargetManifest flagged = native;
  flagged.whitelisted = true;
  EXPECT_EQ(ClassifyHazard(flagged, {}), HazardClass::kPure);
}

TEST(Manifest, HashCoversArtifactBytes) {
  TempDir dir;
  TargetManifest m = FixtureManifest();
  m.artifact_path = (dir.path() / "lib.so").string();
  WriteFile(m.artifact_path, "one");
  std::string h1 = ManifestHash(m);
  EXPECT_EQ(h1, ManifestHash(m));
  WriteFile(m.artifact_path, "two");
  EXPECT_NE(h1, ManifestHash(m));
  TargetManifest other = ParseManifest(kMinimal);
  EXPECT_NE(ManifestHash(other), ManifestHash(m));
}

TEST(Manifest, Names) {
  EXPECT_EQ(HazardName(Hazard::kManaged), "managed");
  EXPECT_EQ(HazardName(Hazard::kNativeUnchecked), "native-unchecked");
  EXPECT_EQ(ParamKindName(ParamKind::kHandle), "handle");
}

}  // namespace
}  // namespace isoharness
