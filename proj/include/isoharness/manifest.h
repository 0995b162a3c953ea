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

// Declarative description of a target under test: what may be called, with
// which argument domains, and how hazardous the code behind it is.
// The on-disk format is documented in docs/manifest.md.

#ifndef ISOHARNESS_MANIFEST_H_
#define ISOHARNESS_MANIFEST_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace isoharness {

inline constexpr int kManifestSchema = 1;
inline constexpr std::size_t kMaxParams = 16;
inline constexpr std::string_view kBuiltinPrefix = "builtin:";

enum class Hazard { kManaged, kNativeUnchecked };

enum class ParamKind { kInt, kFloat, kBytes, kEnum, kHandle };

struct ParamSpec {
  ParamKind kind = ParamKind::kInt;
  bool nullable = false;
  // kInt
  int64_t int_min = 0;
  int64_t int_max = 0;
  // kFloat
  double float_min = 0.0;
  double float_max = 0.0;
  // kBytes
  uint64_t max_len = 0;
  // kEnum
  std::vector<int64_t> values;
  // kHandle
  std::string type_tag;

  friend bool operator==(const ParamSpec&, const ParamSpec&) = default;
};

enum class ReturnKind { kVoid, kInt, kFloat, kHandle };

struct ReturnSpec {
  ReturnKind kind = ReturnKind::kVoid;
  std::string type_tag;  // kHandle only

  friend bool operator==(const ReturnSpec&, const ReturnSpec&) = default;
};

struct FunctionDecl {
  std::string symbol;
  std::vector<ParamSpec> params;
  ReturnSpec returns;
  Hazard hazard = Hazard::kManaged;

  bool ProducesHandle(std::string_view tag) const {
    return returns.kind == ReturnKind::kHandle && returns.type_tag == tag;
  }

  friend bool operator==(const FunctionDecl&, const FunctionDecl&) = default;
};

struct TargetManifest {
  std::string target_id;
  // Either a path to a shared library or "builtin:<name>". Relative paths
  // are resolved against the manifest's directory at load time.
  std::string artifact_path;
  Hazard hazard = Hazard::kManaged;
  bool whitelisted = false;
  std::vector<FunctionDecl> functions;
  uint32_t coverage_edges = 0;
  std::optional<std::string> setup_symbol;
  std::optional<std::string> teardown_symbol;

  bool IsBuiltin() const { return artifact_path.starts_with(kBuiltinPrefix); }
  std::string_view BuiltinName() const {
    return std::string_view(artifact_path).substr(kBuiltinPrefix.size());
  }
  const FunctionDecl* Find(std::string_view symbol) const;

  friend bool operator==(const TargetManifest&,
                         const TargetManifest&) = default;
};

// Parses manifest text. `base_dir` anchors relative artifact paths; pass an
// empty path to keep them as written. Throws ParseError or ValidationError.
TargetManifest ParseManifest(std::string_view text,
                             const std::filesystem::path& base_dir = {});

// Reads and parses a manifest file. Throws IoError in addition to the
// ParseManifest errors.
TargetManifest LoadManifest(const std::filesystem::path& path);

// Canonical serialization: sorted keys, no insignificant whitespace.
// ParseManifest(SerializeManifest(m)) == m for every valid m.
std::string SerializeManifest(const TargetManifest& manifest);

// Checks every invariant; throws ValidationError naming the first violation.
void ValidateManifest(const TargetManifest& manifest);

// 64-bit identity of a target build: canonical manifest text plus the bytes
// of the artifact when it is a file. Rendered as 16 lowercase hex digits.
std::string ManifestHash(const TargetManifest& manifest);

enum class HazardClass { kPure, kNative };

// kNative iff the target is declared native-unchecked and is neither flagged
// whitelisted in its manifest nor listed in `whitelist`.
HazardClass ClassifyHazard(const TargetManifest& manifest,
                           const std::set<std::string>& whitelist);

std::string_view HazardName(Hazard hazard);
std::string_view ParamKindName(ParamKind kind);

}  // namespace isoharness

#endif  // ISOHARNESS_MANIFEST_H_
