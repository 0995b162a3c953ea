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

// Managed stubs that live inside the harness. They never fault, so they are
// the targets for self-tests that must not depend on a native library:
//
//   builtin:arith    stateless integer arithmetic, no coverage edges
//   builtin:branchy  an accumulator handle with 16 instrumented edges

#include <memory>
#include <mutex>

#include "isoharness/error.h"
#include "isoharness/target.h"

namespace isoharness {

namespace {

// arith

int32_t ArithNoop(const isoh_value*, uint32_t, isoh_value*) { return 0; }

int32_t ArithAdd(const isoh_value* a, uint32_t, isoh_value* ret) {
  ret->kind = ISOH_INT;
  ret->i = a[0].i + a[1].i;
  return 0;
}

int32_t ArithSub(const isoh_value* a, uint32_t, isoh_value* ret) {
  ret->kind = ISOH_INT;
  ret->i = a[0].i - a[1].i;
  return 0;
}

int32_t ArithMul(const isoh_value* a, uint32_t, isoh_value* ret) {
  ret->kind = ISOH_INT;
  ret->i = a[0].i * a[1].i;
  return 0;
}

int32_t ArithSafeDiv(const isoh_value* a, uint32_t, isoh_value* ret) {
  if (a[1].i == 0) return 1;
  ret->kind = ISOH_INT;
  ret->i = a[0].i / a[1].i;
  return 0;
}

// branchy

struct Accumulator {
  int64_t sum = 0;
  int64_t count = 0;
  int64_t mode = 0;
  uint64_t bytes_seen = 0;
};

std::mutex g_pool_mu;
std::vector<std::unique_ptr<Accumulator>>& Pool() {
  static auto* pool = new std::vector<std::unique_ptr<Accumulator>>();
  return *pool;
}

uint64_t* g_branchy_counters = nullptr;
uint32_t g_branchy_count = 0;

void BranchyAttach(uint64_t* counters, uint32_t count) {
  g_branchy_counters = counters;
  g_branchy_count = counters != nullptr ? count : 0;
}

void BranchyReset() {
  std::lock_guard<std::mutex> lock(g_pool_mu);
  Pool().clear();
}

void Edge(uint32_t i) {
  if (i < g_branchy_count) ++g_branchy_counters[i];
}

Accumulator* Acc(const isoh_value& v) {
  return static_cast<Accumulator*>(v.handle);
}

int32_t AccNew(const isoh_value*, uint32_t, isoh_value* ret) {
  auto acc = std::make_unique<Accumulator>();
  ret->kind = ISOH_HANDLE;
  ret->handle = acc.get();
  std::lock_guard<std::mutex> lock(g_pool_mu);
  Pool().push_back(std::move(acc));
  return 0;
}

int32_t AccPush(const isoh_value* a, uint32_t, isoh_value*) {
  Accumulator* acc = Acc(a[0]);
  if (acc == nullptr) return 3;
  Edge(0);
  int64_t v = a[1].i;
  if (v < 0) {
    Edge(1);
  } else {
    Edge(2);
  }
  if (v == 42) Edge(3);
  acc->sum += v;
  ++acc->count;
  return 0;
}

int32_t AccMode(const isoh_value* a, uint32_t, isoh_value*) {
  Accumulator* acc = Acc(a[0]);
  if (acc == nullptr) return 3;
  int64_t mode = a[1].i;
  if (mode >= 0 && mode <= 3) Edge(4 + static_cast<uint32_t>(mode));
  acc->mode = mode;
  return 0;
}

int32_t AccFeed(const isoh_value* a, uint32_t, isoh_value* ret) {
  Accumulator* acc = Acc(a[0]);
  if (acc == nullptr) return 3;
  const isoh_value& buf = a[1];
  if (buf.len == 0) {
    Edge(8);
  } else if (buf.len > 4) {
    Edge(9);
  }
  if (buf.len > 0 && buf.bytes[0] == 'Z') Edge(10);
  acc->bytes_seen += buf.len;
  ret->kind = ISOH_INT;
  ret->i = static_cast<int64_t>(acc->bytes_seen);
  return 0;
}

int32_t AccCheck(const isoh_value* a, uint32_t, isoh_value* ret) {
  Accumulator* acc = Acc(a[0]);
  if (acc == nullptr) return 3;
  Edge(11);
  if (acc->count == 0) {
    Edge(15);
    return 2;
  }
  if (acc->mode == 3 && acc->sum > 50) Edge(12);
  if (acc->count > 3) Edge(13);
  if (acc->sum < 0) Edge(14);
  ret->kind = ISOH_INT;
  ret->i = acc->sum;
  return 0;
}

const std::vector<BuiltinLibrary>& Libraries() {
  static const auto* libs = new std::vector<BuiltinLibrary>{
      {"arith",
       {{"noop", ArithNoop},
        {"add", ArithAdd},
        {"sub", ArithSub},
        {"mul", ArithMul},
        {"safe_div", ArithSafeDiv}},
       nullptr,
       nullptr},
      {"branchy",
       {{"acc_new", AccNew},
        {"acc_push", AccPush},
        {"acc_mode", AccMode},
        {"acc_feed", AccFeed},
        {"acc_check", AccCheck}},
       BranchyAttach,
       BranchyReset},
  };
  return *libs;
}

ParamSpec IntParam(int64_t lo, int64_t hi) {
  ParamSpec p;
  p.kind = ParamKind::kInt;
  p.int_min = lo;
  p.int_max = hi;
  return p;
}

ParamSpec HandleParam(std::string tag) {
  ParamSpec p;
  p.kind = ParamKind::kHandle;
  p.type_tag = std::move(tag);
  return p;
}

FunctionDecl Fn(std::string symbol, std::vector<ParamSpec> params,
                ReturnSpec returns) {
  return {std::move(symbol), std::move(params), std::move(returns),
          Hazard::kManaged};
}

}  // namespace

const BuiltinLibrary* FindBuiltin(std::string_view name) {
  for (const auto& lib : Libraries()) {
    if (lib.name == name) return &lib;
  }
  return nullptr;
}

std::vector<std::string> BuiltinNames() {
  std::vector<std::string> out;
  for (const auto& lib : Libraries()) out.push_back(lib.name);
  return out;
}

TargetManifest BuiltinManifest(std::string_view name) {
  TargetManifest m;
  m.target_id = std::string(name);
  m.artifact_path = std::string(kBuiltinPrefix) + std::string(name);
  m.hazard = Hazard::kManaged;
  const ReturnSpec kInt{ReturnKind::kInt, ""};
  const ReturnSpec kVoid{ReturnKind::kVoid, ""};
  if (name == "arith") {
    m.coverage_edges = 0;
    m.functions = {
        Fn("noop", {}, kVoid),
        Fn("add", {IntParam(-1000, 1000), IntParam(-1000, 1000)}, kInt),
        Fn("sub", {IntParam(-1000, 1000), IntParam(-1000, 1000)}, kInt),
        Fn("mul", {IntParam(-1000, 1000), IntParam(-1000, 1000)}, kInt),
        Fn("safe_div", {IntParam(-1000, 1000), IntParam(-10, 10)}, kInt),
    };
  } else if (name == "branchy") {
    m.coverage_edges = 16;
    ParamSpec mode;
    mode.kind = ParamKind::kEnum;
    mode.values = {0, 1, 2, 3};
    ParamSpec bytes;
    bytes.kind = ParamKind::kBytes;
    bytes.max_len = 8;
    m.functions = {
        Fn("acc_new", {}, {ReturnKind::kHandle, "Acc"}),
        Fn("acc_push", {HandleParam("Acc"), IntParam(-100, 100)}, kVoid),
        Fn("acc_mode", {HandleParam("Acc"), mode}, kVoid),
        Fn("acc_feed", {HandleParam("Acc"), bytes}, kInt),
        Fn("acc_check", {HandleParam("Acc")}, kInt),
    };
  } else {
    throw ValidationError("unknown builtin target '" + std::string(name) + "'");
  }
  ValidateManifest(m);
  return m;
}

}  // namespace isoharness
