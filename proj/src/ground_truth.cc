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

#include <fstream>
#include <sstream>

#include "isoharness/error.h"
#include "isoharness/json_codec.h"

namespace isoharness {

using nlohmann::json;

namespace {

void RequireKeys(const json& j, std::initializer_list<std::string_view> keys,
                 const std::string& where) {
  if (!j.is_object()) throw ParseError(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (auto k : keys) known = known || key == k;
    if (!known) throw ParseError(where + ": unknown key '" + key + "'");
  }
}

}  // namespace

GroundTruth ParseGroundTruth(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("ground truth: ") + e.what());
  }
  try {
    RequireKeys(j, {"schema", "target_id", "faults"}, "ground truth");
    if (j.at("schema") != kGroundTruthSchema) {
      throw ParseError("ground truth: unsupported schema");
    }
    GroundTruth g;
    g.target_id = j.at("target_id").get<std::string>();
    for (const json& f : j.at("faults")) {
      RequireKeys(f, {"site", "trigger", "expected_exit_code", "witness"},
                  "seeded fault");
      SeededFault s;
      s.site = f.at("site").get<std::string>();
      s.trigger = f.at("trigger").get<std::string>();
      if (!f.at("expected_exit_code").is_null()) {
        s.expected_exit_code = f.at("expected_exit_code").get<int>();
      }
      try {
        s.witness = TestCaseFromJson(f.at("witness"));
      } catch (const DecodeError& e) {
        throw ParseError(std::string("seeded fault witness: ") + e.what());
      }
      g.faults.push_back(std::move(s));
    }
    return g;
  } catch (const json::exception& e) {
    throw ParseError(std::string("ground truth: ") + e.what());
  }
}

GroundTruth LoadGroundTruth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseGroundTruth(ss.str());
}

std::string SerializeGroundTruth(const GroundTruth& truth) {
  json faults = json::array();
  for (const auto& f : truth.faults) {
    faults.push_back({{"site", f.site},
                      {"trigger", f.trigger},
                      {"expected_exit_code", f.expected_exit_code
                                                 ? json(*f.expected_exit_code)
                                                 : json(nullptr)},
                      {"witness", TestCaseToJson(f.witness)}});
  }
  json j = {{"schema", kGroundTruthSchema},
            {"target_id", truth.target_id},
            {"faults", std::move(faults)}};
  return j.dump(2) + "\n";
}

std::set<FaultSite> FaultSites(const GroundTruth& truth) {
  std::set<FaultSite> out;
  for (const auto& f : truth.faults) out.emplace(f.site, f.expected_exit_code);
  return out;
}

std::set<FaultSite> FaultSites(std::span<const CrashCause> causes) {
  std::set<FaultSite> out;
  for (const auto& c : causes) out.emplace(c.key.callee, c.key.exit_code);
  return out;
}

}  // namespace isoharness
