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

#include "isoharness/target.h"

#include <dlfcn.h>

#include "isoharness/error.h"

namespace isoharness {

std::shared_ptr<Target> Target::Load(const TargetManifest& manifest,
                                     SharedRegion& region) {
  if (region.edge_count() != manifest.coverage_edges) {
    throw LoadError(manifest.target_id + ": shared region has " +
                    std::to_string(region.edge_count()) +
                    " edges, manifest declares " +
                    std::to_string(manifest.coverage_edges));
  }
  std::shared_ptr<Target> target(new Target());
  target->manifest_ = manifest;

  if (manifest.IsBuiltin()) {
    const BuiltinLibrary* lib = FindBuiltin(manifest.BuiltinName());
    if (lib == nullptr) {
      throw LoadError("unknown builtin target '" +
                      std::string(manifest.BuiltinName()) + "'");
    }
    for (const auto& f : manifest.functions) {
      auto it = lib->functions.find(f.symbol);
      if (it == lib->functions.end()) {
        throw LoadError(manifest.artifact_path + " has no function '" +
                        f.symbol + "'");
      }
      target->entries_.push_back(it->second);
    }
    if (lib->attach != nullptr) {
      lib->attach(region.counters(), region.edge_count());
    }
    target->builtin_reset_ = lib->reset;
    if (manifest.setup_symbol || manifest.teardown_symbol) {
      throw LoadError("builtin targets have no lifecycle hooks");
    }
  } else {
    // The handle is intentionally never closed: an abandoned executor thread
    // may still be running library code.
    void* handle = dlopen(manifest.artifact_path.c_str(), RTLD_NOW | RTLD_LOCAL);
    if (handle == nullptr) {
      const char* err = dlerror();
      throw LoadError("dlopen " + manifest.artifact_path + ": " +
                      (err ? err : "unknown error"));
    }
    auto resolve = [&](const std::string& symbol) {
      void* sym = dlsym(handle, symbol.c_str());
      if (sym == nullptr) {
        throw LoadError(manifest.artifact_path + " does not export '" + symbol +
                        "'");
      }
      return sym;
    };
    for (const auto& f : manifest.functions) {
      target->entries_.push_back(
          reinterpret_cast<isoh_entry_fn>(resolve(f.symbol)));
    }
    if (void* attach = dlsym(handle, ISOH_SHIM_ATTACH_SYMBOL)) {
      reinterpret_cast<isoh_shim_attach_fn>(attach)(region.counters(),
                                                    region.edge_count());
    }
    if (manifest.setup_symbol) {
      reinterpret_cast<isoh_lifecycle_fn>(resolve(*manifest.setup_symbol))();
    }
    if (manifest.teardown_symbol) {
      target->teardown_ =
          reinterpret_cast<isoh_lifecycle_fn>(resolve(*manifest.teardown_symbol));
    }
  }
  for (size_t i = 0; i < manifest.functions.size(); ++i) {
    target->index_.emplace(manifest.functions[i].symbol, static_cast<int>(i));
  }
  return target;
}

Target::~Target() {
  if (teardown_ != nullptr) teardown_();
}

int Target::FunctionIndex(std::string_view symbol) const {
  auto it = index_.find(symbol);
  return it == index_.end() ? -1 : it->second;
}

int32_t Target::Invoke(int function_index, const isoh_value* args,
                       uint32_t nargs, isoh_value* ret) const {
  return entries_.at(static_cast<size_t>(function_index))(args, nargs, ret);
}

void Target::EndExecution() {
  if (builtin_reset_ != nullptr) builtin_reset_();
}

}  // namespace isoharness
