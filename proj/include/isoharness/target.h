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

// A loaded target: entry points resolved against either a shared library or
// one of the harness's builtin managed stubs.

#ifndef ISOHARNESS_TARGET_H_
#define ISOHARNESS_TARGET_H_

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "isoharness/manifest.h"
#include "isoharness/shared_region.h"
#include "isoharness/target_abi.h"

namespace isoharness {

class Target {
 public:
  // Resolves every declared function, attaches the coverage shim to
  // `region` and runs the setup hook. The library stays mapped for the
  // lifetime of the process. Throws LoadError.
  static std::shared_ptr<Target> Load(const TargetManifest& manifest,
                                      SharedRegion& region);

  ~Target();

  const TargetManifest& manifest() const { return manifest_; }
  // Index into manifest().functions, or -1.
  int FunctionIndex(std::string_view symbol) const;
  int32_t Invoke(int function_index, const isoh_value* args, uint32_t nargs,
                 isoh_value* ret) const;

  // Builtin stubs allocate handles from a per-execution pool; this frees it.
  void EndExecution();

 private:
  Target() = default;

  TargetManifest manifest_;
  std::vector<isoh_entry_fn> entries_;
  std::map<std::string, int, std::less<>> index_;
  isoh_lifecycle_fn teardown_ = nullptr;
  void (*builtin_reset_)() = nullptr;
};

// Builtin managed stubs addressed as "builtin:<name>".
struct BuiltinLibrary {
  std::string name;
  std::map<std::string, isoh_entry_fn, std::less<>> functions;
  isoh_shim_attach_fn attach = nullptr;
  void (*reset)() = nullptr;
};

const BuiltinLibrary* FindBuiltin(std::string_view name);
std::vector<std::string> BuiltinNames();

// The canonical manifest for a builtin stub, e.g. BuiltinManifest("arith").
// Throws ValidationError for unknown names.
TargetManifest BuiltinManifest(std::string_view name);

}  // namespace isoharness

#endif  // ISOHARNESS_TARGET_H_
