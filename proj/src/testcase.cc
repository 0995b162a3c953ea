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

#include "isoharness/testcase.h"

#include <algorithm>
#include <limits>
#include <random>
#include <sstream>

#include "isoharness/error.h"
#include "isoharness/json_codec.h"
#include "isoharness/util.h"

namespace isoharness {

using nlohmann::json;

namespace {

constexpr size_t kDropped = std::numeric_limits<size_t>::max();
constexpr int kMutationAttempts = 32;

// Distinct id salts so that the same seed used for different operators does
// not produce colliding ids.
constexpr uint64_t kRandomSalt = 0x52414e444f4d0001ULL;
constexpr uint64_t kMutateSalt = 0x4d55544154450002ULL;
constexpr uint64_t kCrossSalt = 0x43524f5353000003ULL;

using Rng = std::mt19937_64;

bool Chance(Rng& rng, double p) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

size_t Pick(Rng& rng, size_t n) {
  return std::uniform_int_distribution<size_t>(0, n - 1)(rng);
}

// Indices of statements in `prefix` (all of it) whose callee returns `tag`.
std::vector<size_t> Producers(const std::vector<Statement>& prefix,
                              size_t limit, const TargetManifest& manifest,
                              std::string_view tag) {
  std::vector<size_t> out;
  for (size_t i = 0; i < limit && i < prefix.size(); ++i) {
    const FunctionDecl* f = manifest.Find(prefix[i].callee);
    if (f != nullptr && f->ProducesHandle(tag)) out.push_back(i);
  }
  return out;
}

bool Callable(const FunctionDecl& f, const std::vector<Statement>& prefix,
              size_t position, const TargetManifest& manifest) {
  for (const auto& p : f.params) {
    if (p.kind != ParamKind::kHandle || p.nullable) continue;
    if (Producers(prefix, position, manifest, p.type_tag).empty()) {
      return false;
    }
  }
  return true;
}

int64_t SampleInt(const ParamSpec& p, Rng& rng, const GenerationOptions& opt) {
  if (Chance(rng, opt.boundary_bias)) {
    std::vector<int64_t> boundary = {p.int_min, p.int_max};
    for (int64_t v : {int64_t{0}, int64_t{-1}, int64_t{1}}) {
      if (v >= p.int_min && v <= p.int_max) boundary.push_back(v);
    }
    return boundary[Pick(rng, boundary.size())];
  }
  return std::uniform_int_distribution<int64_t>(p.int_min, p.int_max)(rng);
}

double SampleFloat(const ParamSpec& p, Rng& rng) {
  if (p.float_min == p.float_max) return p.float_min + 0.0;
  double v = std::uniform_real_distribution<double>(p.float_min,
                                                    p.float_max)(rng);
  return std::clamp(v, p.float_min, p.float_max) + 0.0;
}

// Samples an argument for `p` at `position`; handle parameters refer to a
// producer in `prefix[0, position)`. Returns nullopt when a non-nullable
// handle has no producer.
std::optional<Arg> SampleArg(const ParamSpec& p,
                             const std::vector<Statement>& prefix,
                             size_t position, const TargetManifest& manifest,
                             Rng& rng, const GenerationOptions& opt) {
  if (p.nullable && Chance(rng, opt.null_probability)) return NullArg{};
  switch (p.kind) {
    case ParamKind::kInt:
      return IntArg{SampleInt(p, rng, opt)};
    case ParamKind::kFloat:
      return FloatArg{SampleFloat(p, rng)};
    case ParamKind::kBytes: {
      size_t len = std::uniform_int_distribution<uint64_t>(0, p.max_len)(rng);
      std::vector<uint8_t> bytes(len);
      std::uniform_int_distribution<int> byte(0, 255);
      for (auto& b : bytes) b = static_cast<uint8_t>(byte(rng));
      return BytesArg{std::move(bytes)};
    }
    case ParamKind::kEnum:
      return EnumArg{p.values[Pick(rng, p.values.size())]};
    case ParamKind::kHandle: {
      auto producers = Producers(prefix, position, manifest, p.type_tag);
      if (producers.empty()) {
        if (p.nullable) return NullArg{};
        return std::nullopt;
      }
      return VarRef{producers[Pick(rng, producers.size())]};
    }
  }
  return std::nullopt;
}

// Appends a call to a random callable function. Returns false if nothing is
// callable at the end of `statements`.
bool AppendRandomCall(std::vector<Statement>& statements,
                      const TargetManifest& manifest, Rng& rng,
                      const GenerationOptions& opt) {
  size_t position = statements.size();
  std::vector<const FunctionDecl*> callable;
  for (const auto& f : manifest.functions) {
    if (Callable(f, statements, position, manifest)) callable.push_back(&f);
  }
  if (callable.empty()) return false;
  const FunctionDecl& f = *callable[Pick(rng, callable.size())];
  Statement st{f.symbol, {}};
  for (const auto& p : f.params) {
    auto arg = SampleArg(p, statements, position, manifest, rng, opt);
    if (!arg) return false;  // unreachable: Callable() checked producers
    st.args.push_back(std::move(*arg));
  }
  statements.push_back(std::move(st));
  return true;
}

// Rebuilds `input` so every handle reference is valid. References in `input`
// are expressed in input indices; kDropped marks a reference whose producer
// no longer exists. Statements that cannot be repaired are dropped, and
// later references to them are repaired in turn.
std::vector<Statement> Repair(const std::vector<Statement>& input,
                              const TargetManifest& manifest, Rng& rng,
                              const GenerationOptions& opt) {
  std::vector<Statement> out;
  std::vector<size_t> remap(input.size(), kDropped);
  for (size_t i = 0; i < input.size(); ++i) {
    const FunctionDecl* f = manifest.Find(input[i].callee);
    if (f == nullptr || f->params.size() != input[i].args.size()) continue;
    Statement st{input[i].callee, {}};
    bool ok = true;
    for (size_t k = 0; k < f->params.size() && ok; ++k) {
      const ParamSpec& p = f->params[k];
      const Arg& arg = input[i].args[k];
      if (p.kind != ParamKind::kHandle) {
        st.args.push_back(arg);
        continue;
      }
      if (const auto* ref = std::get_if<VarRef>(&arg)) {
        size_t target = ref->statement < i ? remap[ref->statement] : kDropped;
        if (target != kDropped && target < out.size()) {
          const FunctionDecl* producer = manifest.Find(out[target].callee);
          if (producer != nullptr && producer->ProducesHandle(p.type_tag)) {
            st.args.push_back(VarRef{target});
            continue;
          }
        }
      } else if (std::holds_alternative<NullArg>(arg) && p.nullable) {
        st.args.push_back(arg);
        continue;
      }
      auto fresh = SampleArg(p, out, out.size(), manifest, rng, opt);
      if (!fresh) {
        ok = false;
      } else {
        st.args.push_back(std::move(*fresh));
      }
    }
    if (!ok) continue;
    remap[i] = out.size();
    out.push_back(std::move(st));
  }
  return out;
}

bool MutateArgument(std::vector<Statement>& st, const TargetManifest& manifest,
                    Rng& rng, const GenerationOptions& opt) {
  std::vector<size_t> with_args;
  for (size_t i = 0; i < st.size(); ++i) {
    if (!st[i].args.empty()) with_args.push_back(i);
  }
  if (with_args.empty()) return false;
  size_t i = with_args[Pick(rng, with_args.size())];
  const FunctionDecl* f = manifest.Find(st[i].callee);
  size_t k = Pick(rng, st[i].args.size());
  const ParamSpec& p = f->params[k];
  Arg& arg = st[i].args[k];
  if (p.kind == ParamKind::kInt && std::holds_alternative<IntArg>(arg) &&
      Chance(rng, 0.5)) {
    int64_t v = std::get<IntArg>(arg).value;
    int64_t delta = std::uniform_int_distribution<int64_t>(1, 10)(rng);
    if (Chance(rng, 0.5)) delta = -delta;
    // Saturating add within [min, max].
    if (delta > 0) {
      v = (v > p.int_max - delta) ? p.int_max : v + delta;
    } else {
      v = (v < p.int_min - delta) ? p.int_min : v + delta;
    }
    arg = IntArg{v};
    return true;
  }
  auto fresh = SampleArg(p, st, i, manifest, rng, opt);
  if (!fresh) return false;
  arg = std::move(*fresh);
  return true;
}

bool ReplaceCallee(std::vector<Statement>& st, const TargetManifest& manifest,
                   Rng& rng, const GenerationOptions& opt) {
  size_t i = Pick(rng, st.size());
  std::vector<const FunctionDecl*> options;
  for (const auto& f : manifest.functions) {
    if (f.symbol != st[i].callee && Callable(f, st, i, manifest)) {
      options.push_back(&f);
    }
  }
  if (options.empty()) return false;
  const FunctionDecl& f = *options[Pick(rng, options.size())];
  Statement replacement{f.symbol, {}};
  for (const auto& p : f.params) {
    auto arg = SampleArg(p, st, i, manifest, rng, opt);
    if (!arg) return false;
    replacement.args.push_back(std::move(*arg));
  }
  st[i] = std::move(replacement);
  st = Repair(st, manifest, rng, opt);
  return !st.empty();
}

bool DeleteStatement(std::vector<Statement>& st, const TargetManifest& manifest,
                     Rng& rng, const GenerationOptions& opt) {
  if (st.size() < 2) return false;
  size_t i = Pick(rng, st.size());
  // Express the remaining statements in the original index space, with
  // references to `i` marked dangling, then repair.
  std::vector<Statement> rest;
  for (size_t k = 0; k < st.size(); ++k) {
    Statement copy = st[k];
    if (k == i) {
      copy.callee.clear();  // Find() fails, Repair() drops it
      copy.args.clear();
    }
    for (auto& a : copy.args) {
      if (auto* ref = std::get_if<VarRef>(&a); ref && ref->statement == i) {
        ref->statement = kDropped;
      }
    }
    rest.push_back(std::move(copy));
  }
  auto repaired = Repair(rest, manifest, rng, opt);
  if (repaired.empty()) return false;
  st = std::move(repaired);
  return true;
}

json ArgToJson(const Arg& arg) {
  return std::visit(
      [](const auto& a) -> json {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, NullArg>) {
          return {{"null", true}};
        } else if constexpr (std::is_same_v<T, IntArg>) {
          return {{"int", a.value}};
        } else if constexpr (std::is_same_v<T, FloatArg>) {
          return {{"float", a.value}};
        } else if constexpr (std::is_same_v<T, BytesArg>) {
          return {{"bytes", BytesToHex(a.value)}};
        } else if constexpr (std::is_same_v<T, EnumArg>) {
          return {{"enum", a.value}};
        } else {
          return {{"ref", a.statement}};
        }
      },
      arg);
}

Arg ArgFromJson(const json& j) {
  if (!j.is_object() || j.size() != 1) {
    throw DecodeError("argument must be a single-key object");
  }
  const std::string& key = j.begin().key();
  const json& value = j.begin().value();
  if (key == "null") {
    if (value != true) throw DecodeError("null argument must be true");
    return NullArg{};
  }
  if (key == "int" && value.is_number_integer()) {
    return IntArg{value.get<int64_t>()};
  }
  if (key == "float" && value.is_number()) return FloatArg{value.get<double>()};
  if (key == "bytes" && value.is_string()) {
    return BytesArg{HexToBytes(value.get<std::string>())};
  }
  if (key == "enum" && value.is_number_integer()) {
    return EnumArg{value.get<int64_t>()};
  }
  if (key == "ref" && value.is_number_unsigned()) {
    return VarRef{value.get<size_t>()};
  }
  throw DecodeError("unrecognised argument '" + key + "'");
}

}  // namespace

std::string CheckTestCase(const TestCase& tc, const TargetManifest& manifest,
                          size_t max_len) {
  if (tc.statements.empty()) return "test case has no statements";
  if (tc.statements.size() > max_len) return "test case exceeds max length";
  for (size_t i = 0; i < tc.statements.size(); ++i) {
    const Statement& st = tc.statements[i];
    std::string where = "statement " + std::to_string(i) + " (" + st.callee +
                        "): ";
    const FunctionDecl* f = manifest.Find(st.callee);
    if (f == nullptr) return where + "unknown callee";
    if (f->params.size() != st.args.size()) return where + "arity mismatch";
    for (size_t k = 0; k < st.args.size(); ++k) {
      const ParamSpec& p = f->params[k];
      const Arg& a = st.args[k];
      std::string arg_where = where + "arg " + std::to_string(k) + ": ";
      if (std::holds_alternative<NullArg>(a)) {
        if (!p.nullable) return arg_where + "null for non-nullable parameter";
        continue;
      }
      switch (p.kind) {
        case ParamKind::kInt: {
          const auto* v = std::get_if<IntArg>(&a);
          if (v == nullptr) return arg_where + "expected int";
          if (v->value < p.int_min || v->value > p.int_max) {
            return arg_where + "int out of range";
          }
          break;
        }
        case ParamKind::kFloat: {
          const auto* v = std::get_if<FloatArg>(&a);
          if (v == nullptr) return arg_where + "expected float";
          if (!(v->value >= p.float_min && v->value <= p.float_max)) {
            return arg_where + "float out of range";
          }
          break;
        }
        case ParamKind::kBytes: {
          const auto* v = std::get_if<BytesArg>(&a);
          if (v == nullptr) return arg_where + "expected bytes";
          if (v->value.size() > p.max_len) return arg_where + "bytes too long";
          break;
        }
        case ParamKind::kEnum: {
          const auto* v = std::get_if<EnumArg>(&a);
          if (v == nullptr) return arg_where + "expected enum";
          if (std::find(p.values.begin(), p.values.end(), v->value) ==
              p.values.end()) {
            return arg_where + "enum value not declared";
          }
          break;
        }
        case ParamKind::kHandle: {
          const auto* v = std::get_if<VarRef>(&a);
          if (v == nullptr) return arg_where + "expected a variable reference";
          if (v->statement >= i) return arg_where + "reference is not backward";
          const FunctionDecl* producer =
              manifest.Find(tc.statements[v->statement].callee);
          if (producer == nullptr || !producer->ProducesHandle(p.type_tag)) {
            return arg_where + "referenced statement does not return '" +
                   p.type_tag + "'";
          }
          break;
        }
      }
    }
  }
  return {};
}

TestCase RandomTest(const TargetManifest& manifest, uint64_t rng_seed,
                    const GenerationOptions& options) {
  if (options.max_len < 1) throw GenerationError("max_len must be >= 1");
  Rng rng(rng_seed);
  size_t length =
      std::uniform_int_distribution<size_t>(1, options.max_len)(rng);
  TestCase tc;
  tc.seed_provenance = rng_seed;
  tc.id = SplitMix64(rng_seed ^ kRandomSalt);
  for (size_t i = 0; i < length; ++i) {
    if (!AppendRandomCall(tc.statements, manifest, rng, options)) break;
  }
  if (tc.statements.empty()) {
    throw GenerationError(manifest.target_id +
                          ": no function is callable without prior handles");
  }
  return tc;
}

TestCase Mutate(const TestCase& tc, const TargetManifest& manifest,
                uint64_t rng_seed, const GenerationOptions& options) {
  Rng rng(rng_seed);
  TestCase out;
  out.seed_provenance = rng_seed;
  out.id = SplitMix64(rng_seed ^ kMutateSalt);
  for (int attempt = 0; attempt < kMutationAttempts; ++attempt) {
    std::vector<Statement> st = tc.statements;
    bool changed = false;
    switch (std::uniform_int_distribution<int>(0, 3)(rng)) {
      case 0:
      case 1:
        changed = MutateArgument(st, manifest, rng, options);
        break;
      case 2:
        changed = ReplaceCallee(st, manifest, rng, options);
        break;
      case 3:
        changed = DeleteStatement(st, manifest, rng, options);
        break;
    }
    if (changed && st != tc.statements && !st.empty()) {
      out.statements = std::move(st);
      return out;
    }
  }
  GenerationOptions same_length = options;
  same_length.max_len = std::max<size_t>(1, tc.size());
  TestCase regenerated =
      RandomTest(manifest, SplitMix64(rng_seed), same_length);
  out.statements = std::move(regenerated.statements);
  return out;
}

TestCase Crossover(const TestCase& a, const TestCase& b,
                   const TargetManifest& manifest, uint64_t rng_seed,
                   const GenerationOptions& options) {
  Rng rng(rng_seed);
  double point = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  size_t cut_a = static_cast<size_t>(point * static_cast<double>(a.size()));
  size_t cut_b = static_cast<size_t>(point * static_cast<double>(b.size()));

  // Combined index space: a[0, cut_a) keeps its indices; b[k] for k >= cut_b
  // becomes cut_a + (k - cut_b). References into b's discarded prefix
  // dangle.
  std::vector<Statement> joined(a.statements.begin(),
                                a.statements.begin() + cut_a);
  for (size_t k = cut_b; k < b.size(); ++k) {
    Statement st = b.statements[k];
    for (auto& arg : st.args) {
      if (auto* ref = std::get_if<VarRef>(&arg)) {
        ref->statement = ref->statement >= cut_b
                             ? cut_a + (ref->statement - cut_b)
                             : kDropped;
      }
    }
    joined.push_back(std::move(st));
  }
  auto child = Repair(joined, manifest, rng, options);
  if (child.size() > options.max_len) child.resize(options.max_len);
  TestCase out;
  out.seed_provenance = rng_seed;
  out.id = SplitMix64(rng_seed ^ kCrossSalt);
  out.statements = child.empty() ? a.statements : std::move(child);
  return out;
}

json TestCaseToJson(const TestCase& tc) {
  if (tc.statements.empty()) {
    throw ValidationError("refusing to encode a test case without statements");
  }
  json st = json::array();
  for (const auto& s : tc.statements) {
    json args = json::array();
    for (const auto& a : s.args) args.push_back(ArgToJson(a));
    st.push_back({{"callee", s.callee}, {"args", std::move(args)}});
  }
  return {{"schema", kTestCaseSchema},
          {"id", tc.id},
          {"seed", tc.seed_provenance},
          {"statements", std::move(st)}};
}

TestCase TestCaseFromJson(const json& j) {
  try {
    if (!j.is_object()) throw DecodeError("test case must be an object");
    if (j.size() != 4 || !j.contains("schema") || !j.contains("id") ||
        !j.contains("seed") || !j.contains("statements")) {
      throw DecodeError("test case keys must be schema, id, seed, statements");
    }
    if (!j["schema"].is_number_integer() ||
        j["schema"].get<int>() != kTestCaseSchema) {
      throw DecodeError("unsupported test case schema");
    }
    TestCase tc;
    tc.id = j["id"].get<uint64_t>();
    tc.seed_provenance = j["seed"].get<uint64_t>();
    const json& st = j["statements"];
    if (!st.is_array() || st.empty()) {
      throw DecodeError("statements must be a non-empty array");
    }
    for (const auto& s : st) {
      if (!s.is_object() || s.size() != 2 || !s.contains("callee") ||
          !s.contains("args") || !s["args"].is_array()) {
        throw DecodeError("malformed statement");
      }
      Statement out{s["callee"].get<std::string>(), {}};
      for (const auto& a : s["args"]) out.args.push_back(ArgFromJson(a));
      tc.statements.push_back(std::move(out));
    }
    return tc;
  } catch (const json::exception& e) {
    throw DecodeError(std::string("test case: ") + e.what());
  }
}

std::string SerializeTestCase(const TestCase& tc) {
  return TestCaseToJson(tc).dump();
}

TestCase DeserializeTestCase(std::string_view bytes) {
  json j;
  try {
    j = json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw DecodeError(std::string("test case: ") + e.what());
  }
  return TestCaseFromJson(j);
}

json LocatorToJson(const std::optional<StatementLocator>& loc) {
  if (!loc) return nullptr;
  return {{"callee", loc->callee_symbol}, {"index", loc->statement_index}};
}

std::optional<StatementLocator> LocatorFromJson(const json& j) {
  if (j.is_null()) return std::nullopt;
  try {
    if (!j.is_object() || j.size() != 2) throw DecodeError("malformed locator");
    return StatementLocator{j.at("callee").get<std::string>(),
                            j.at("index").get<size_t>()};
  } catch (const json::exception& e) {
    throw DecodeError(std::string("locator: ") + e.what());
  }
}

std::string RenderTestCase(const TestCase& tc) {
  std::ostringstream os;
  for (size_t i = 0; i < tc.statements.size(); ++i) {
    const Statement& st = tc.statements[i];
    os << "v" << i << " = " << st.callee << "(";
    for (size_t k = 0; k < st.args.size(); ++k) {
      if (k) os << ", ";
      std::visit(
          [&os](const auto& a) {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, NullArg>) {
              os << "null";
            } else if constexpr (std::is_same_v<T, BytesArg>) {
              os << "b\"" << BytesToHex(a.value) << "\"";
            } else if constexpr (std::is_same_v<T, VarRef>) {
              os << "v" << a.statement;
            } else {
              os << a.value;
            }
          },
          st.args[k]);
    }
    os << ")\n";
  }
  return os.str();
}

}  // namespace isoharness
