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

#include <cmath>
#include <initializer_list>
#include <set>

#include "json.hpp"
#include "isoharness/error.h"
#include "isoharness/util.h"

namespace isoharness {

using nlohmann::json;

namespace {

// Rejects keys outside `allowed` and requires every key in `required`.
void CheckKeys(const json& obj, std::string_view where,
               std::initializer_list<std::string_view> required,
               std::initializer_list<std::string_view> optional = {}) {
  if (!obj.is_object()) {
    throw ParseError(std::string(where) + ": expected an object");
  }
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (auto k : required) known |= (k == key);
    for (auto k : optional) known |= (k == key);
    if (!known) {
      throw ParseError(std::string(where) + ": unknown key '" + key + "'");
    }
  }
  for (auto k : required) {
    if (!obj.contains(k)) {
      throw ParseError(std::string(where) + ": missing key '" +
                       std::string(k) + "'");
    }
  }
}

template <typename T>
T Get(const json& obj, std::string_view key, std::string_view where) {
  try {
    return obj.at(std::string(key)).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(std::string(where) + "." + std::string(key) + ": " +
                     e.what());
  }
}

Hazard ParseHazard(const std::string& s, std::string_view where) {
  if (s == "managed") return Hazard::kManaged;
  if (s == "native-unchecked") return Hazard::kNativeUnchecked;
  throw ParseError(std::string(where) + ": unknown hazard '" + s + "'");
}

ParamSpec ParseParam(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("kind")) {
    throw ParseError(where + ": parameter needs a 'kind'");
  }
  ParamSpec p;
  auto kind = Get<std::string>(j, "kind", where);
  if (kind == "int") {
    CheckKeys(j, where, {"kind", "min", "max"}, {"nullable"});
    p.kind = ParamKind::kInt;
    p.int_min = Get<int64_t>(j, "min", where);
    p.int_max = Get<int64_t>(j, "max", where);
  } else if (kind == "float") {
    CheckKeys(j, where, {"kind", "min", "max"}, {"nullable"});
    p.kind = ParamKind::kFloat;
    p.float_min = Get<double>(j, "min", where);
    p.float_max = Get<double>(j, "max", where);
  } else if (kind == "bytes") {
    CheckKeys(j, where, {"kind", "max_len"}, {"nullable"});
    p.kind = ParamKind::kBytes;
    p.max_len = Get<uint64_t>(j, "max_len", where);
  } else if (kind == "enum") {
    CheckKeys(j, where, {"kind", "values"}, {"nullable"});
    p.kind = ParamKind::kEnum;
    p.values = Get<std::vector<int64_t>>(j, "values", where);
  } else if (kind == "handle") {
    CheckKeys(j, where, {"kind", "type_tag"}, {"nullable"});
    p.kind = ParamKind::kHandle;
    p.type_tag = Get<std::string>(j, "type_tag", where);
  } else {
    throw ParseError(where + ": unknown parameter kind '" + kind + "'");
  }
  if (j.contains("nullable")) p.nullable = Get<bool>(j, "nullable", where);
  return p;
}

ReturnSpec ParseReturn(const json& j, const std::string& where) {
  CheckKeys(j, where, {"kind"}, {"type_tag"});
  ReturnSpec r;
  auto kind = Get<std::string>(j, "kind", where);
  if (kind == "void") {
    r.kind = ReturnKind::kVoid;
  } else if (kind == "int") {
    r.kind = ReturnKind::kInt;
  } else if (kind == "float") {
    r.kind = ReturnKind::kFloat;
  } else if (kind == "handle") {
    r.kind = ReturnKind::kHandle;
    if (!j.contains("type_tag")) {
      throw ParseError(where + ": handle return needs a 'type_tag'");
    }
    r.type_tag = Get<std::string>(j, "type_tag", where);
    return r;
  } else {
    throw ParseError(where + ": unknown return kind '" + kind + "'");
  }
  if (j.contains("type_tag")) {
    throw ParseError(where + ": 'type_tag' only allowed on handle returns");
  }
  return r;
}

json ParamToJson(const ParamSpec& p) {
  json j;
  j["kind"] = ParamKindName(p.kind);
  j["nullable"] = p.nullable;
  switch (p.kind) {
    case ParamKind::kInt:
      j["min"] = p.int_min;
      j["max"] = p.int_max;
      break;
    case ParamKind::kFloat:
      j["min"] = p.float_min;
      j["max"] = p.float_max;
      break;
    case ParamKind::kBytes:
      j["max_len"] = p.max_len;
      break;
    case ParamKind::kEnum:
      j["values"] = p.values;
      break;
    case ParamKind::kHandle:
      j["type_tag"] = p.type_tag;
      break;
  }
  return j;
}

json ReturnToJson(const ReturnSpec& r) {
  json j;
  switch (r.kind) {
    case ReturnKind::kVoid: j["kind"] = "void"; break;
    case ReturnKind::kInt: j["kind"] = "int"; break;
    case ReturnKind::kFloat: j["kind"] = "float"; break;
    case ReturnKind::kHandle:
      j["kind"] = "handle";
      j["type_tag"] = r.type_tag;
      break;
  }
  return j;
}

}  // namespace

const FunctionDecl* TargetManifest::Find(std::string_view symbol) const {
  for (const auto& f : functions) {
    if (f.symbol == symbol) return &f;
  }
  return nullptr;
}

std::string_view HazardName(Hazard hazard) {
  return hazard == Hazard::kManaged ? "managed" : "native-unchecked";
}

std::string_view ParamKindName(ParamKind kind) {
  switch (kind) {
    case ParamKind::kInt: return "int";
    case ParamKind::kFloat: return "float";
    case ParamKind::kBytes: return "bytes";
    case ParamKind::kEnum: return "enum";
    case ParamKind::kHandle: return "handle";
  }
  return "?";
}

void ValidateManifest(const TargetManifest& m) {
  auto fail = [&](const std::string& msg) {
    throw ValidationError(m.target_id + ": " + msg);
  };
  if (m.target_id.empty()) fail("empty target_id");
  if (m.artifact_path.empty()) fail("empty artifact_path");
  if (m.IsBuiltin()) {
    if (m.BuiltinName().empty()) fail("builtin artifact without a name");
  } else if (m.coverage_edges < 1) {
    fail("instrumented targets need coverage_edges >= 1");
  }
  if (m.functions.empty()) fail("no functions declared");

  std::set<std::string> symbols;
  std::set<std::string> produced;
  for (const auto& f : m.functions) {
    if (f.symbol.empty()) fail("empty function symbol");
    if (!symbols.insert(f.symbol).second) {
      fail("duplicate symbol '" + f.symbol + "'");
    }
    if (f.returns.kind == ReturnKind::kHandle) {
      if (f.returns.type_tag.empty()) fail(f.symbol + ": empty return type_tag");
      produced.insert(f.returns.type_tag);
    }
    if (m.hazard == Hazard::kManaged && f.hazard != Hazard::kManaged) {
      fail(f.symbol + ": native-unchecked function in a managed target");
    }
  }
  for (const auto& f : m.functions) {
    if (f.params.size() > kMaxParams) {
      fail(f.symbol + ": more than 16 parameters");
    }
    for (size_t i = 0; i < f.params.size(); ++i) {
      const ParamSpec& p = f.params[i];
      std::string where = f.symbol + " param " + std::to_string(i);
      switch (p.kind) {
        case ParamKind::kInt:
          if (p.int_min > p.int_max) fail(where + ": min > max");
          break;
        case ParamKind::kFloat:
          if (!std::isfinite(p.float_min) || !std::isfinite(p.float_max)) {
            fail(where + ": non-finite bound");
          }
          if (p.float_min > p.float_max) fail(where + ": min > max");
          break;
        case ParamKind::kBytes:
          break;
        case ParamKind::kEnum:
          if (p.values.empty()) fail(where + ": empty enum");
          break;
        case ParamKind::kHandle:
          if (p.type_tag.empty()) fail(where + ": empty type_tag");
          if (!produced.contains(p.type_tag)) {
            fail(where + ": no function returns handle '" + p.type_tag + "'");
          }
          break;
      }
    }
  }
}

TargetManifest ParseManifest(std::string_view text,
                             const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("manifest: ") + e.what());
  }
  CheckKeys(j, "manifest",
            {"schema", "target_id", "artifact_path", "hazard", "whitelisted",
             "functions", "coverage_edges"},
            {"setup_symbol", "teardown_symbol"});
  if (Get<int>(j, "schema", "manifest") != kManifestSchema) {
    throw ParseError("manifest: unsupported schema version");
  }

  TargetManifest m;
  m.target_id = Get<std::string>(j, "target_id", "manifest");
  m.artifact_path = Get<std::string>(j, "artifact_path", "manifest");
  m.hazard = ParseHazard(Get<std::string>(j, "hazard", "manifest"), "manifest");
  m.whitelisted = Get<bool>(j, "whitelisted", "manifest");
  auto edges = Get<int64_t>(j, "coverage_edges", "manifest");
  if (edges < 0 || edges > UINT32_MAX) {
    throw ParseError("manifest: coverage_edges out of range");
  }
  m.coverage_edges = static_cast<uint32_t>(edges);
  for (auto key : {"setup_symbol", "teardown_symbol"}) {
    if (j.contains(key) && !j[key].is_null()) {
      auto& slot = std::string_view(key) == "setup_symbol" ? m.setup_symbol
                                                           : m.teardown_symbol;
      slot = Get<std::string>(j, key, "manifest");
    }
  }

  const json& fns = j["functions"];
  if (!fns.is_array()) throw ParseError("manifest.functions: expected array");
  for (size_t i = 0; i < fns.size(); ++i) {
    std::string where = "functions[" + std::to_string(i) + "]";
    CheckKeys(fns[i], where, {"symbol", "params", "returns", "hazard"});
    FunctionDecl f;
    f.symbol = Get<std::string>(fns[i], "symbol", where);
    f.hazard = ParseHazard(Get<std::string>(fns[i], "hazard", where), where);
    const json& params = fns[i]["params"];
    if (!params.is_array()) throw ParseError(where + ".params: expected array");
    for (size_t k = 0; k < params.size(); ++k) {
      f.params.push_back(
          ParseParam(params[k], where + ".params[" + std::to_string(k) + "]"));
    }
    f.returns = ParseReturn(fns[i]["returns"], where + ".returns");
    m.functions.push_back(std::move(f));
  }

  if (!m.IsBuiltin() && !base_dir.empty()) {
    std::filesystem::path artifact(m.artifact_path);
    if (artifact.is_relative()) {
      m.artifact_path = (base_dir / artifact).lexically_normal().string();
    }
  }
  ValidateManifest(m);
  return m;
}

TargetManifest LoadManifest(const std::filesystem::path& path) {
  std::string text = ReadFile(path);
  std::error_code ec;
  auto dir = std::filesystem::absolute(path, ec).parent_path();
  if (ec) throw IoError("cannot resolve " + path.string());
  return ParseManifest(text, dir);
}

std::string SerializeManifest(const TargetManifest& m) {
  json j;
  j["schema"] = kManifestSchema;
  j["target_id"] = m.target_id;
  j["artifact_path"] = m.artifact_path;
  j["hazard"] = HazardName(m.hazard);
  j["whitelisted"] = m.whitelisted;
  j["coverage_edges"] = m.coverage_edges;
  j["setup_symbol"] =
      m.setup_symbol ? json(*m.setup_symbol) : json(nullptr);
  j["teardown_symbol"] =
      m.teardown_symbol ? json(*m.teardown_symbol) : json(nullptr);
  j["functions"] = json::array();
  for (const auto& f : m.functions) {
    json fj;
    fj["symbol"] = f.symbol;
    fj["hazard"] = HazardName(f.hazard);
    fj["params"] = json::array();
    for (const auto& p : f.params) fj["params"].push_back(ParamToJson(p));
    fj["returns"] = ReturnToJson(f.returns);
    j["functions"].push_back(std::move(fj));
  }
  return j.dump();
}

std::string ManifestHash(const TargetManifest& m) {
  uint64_t h = Fnv1a(SerializeManifest(m));
  if (!m.IsBuiltin()) {
    std::error_code ec;
    if (std::filesystem::is_regular_file(m.artifact_path, ec)) {
      h = Fnv1a(ReadFile(m.artifact_path), h);
    }
  }
  return ToHex(h);
}

HazardClass ClassifyHazard(const TargetManifest& m,
                           const std::set<std::string>& whitelist) {
  if (m.hazard != Hazard::kNativeUnchecked) return HazardClass::kPure;
  if (m.whitelisted || whitelist.contains(m.target_id)) {
    return HazardClass::kPure;
  }
  return HazardClass::kNative;
}

}  // namespace isoharness
