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

#include "isoharness/error.h"
#include "isoharness/json_codec.h"

namespace isoharness {

using nlohmann::json;

namespace {

constexpr int kReproducerSchema = 1;

std::string DescribeLocator(const std::optional<StatementLocator>& loc) {
  if (!loc) return "none";
  return loc->callee_symbol + "#" + std::to_string(loc->statement_index);
}

}  // namespace

Reproducer MakeReproducer(const TargetManifest& manifest, const TestCase& tc,
                          const ExecutionResult& result) {
  Reproducer r;
  r.target_id = manifest.target_id;
  r.manifest_hash = ManifestHash(manifest);
  r.testcase = tc;
  r.expected_exit_code = result.exit_code;
  r.expected_locator = result.last_statement;
  return r;
}

std::string SerializeReproducer(const Reproducer& r) {
  json j = {{"schema", kReproducerSchema},
            {"target_id", r.target_id},
            {"manifest_hash", r.manifest_hash},
            {"testcase", TestCaseToJson(r.testcase)},
            {"expected_exit_code", r.expected_exit_code
                                       ? json(*r.expected_exit_code)
                                       : json(nullptr)},
            {"expected_locator", LocatorToJson(r.expected_locator)}};
  return j.dump(2) + "\n";
}

Reproducer ParseReproducer(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DecodeError(std::string("reproducer: ") + e.what());
  }
  try {
    if (!j.is_object()) throw DecodeError("reproducer: not an object");
    for (const auto& [key, value] : j.items()) {
      if (key != "schema" && key != "target_id" && key != "manifest_hash" &&
          key != "testcase" && key != "expected_exit_code" &&
          key != "expected_locator") {
        throw DecodeError("reproducer: unknown key '" + key + "'");
      }
    }
    if (j.at("schema") != kReproducerSchema) {
      throw DecodeError("reproducer: unsupported schema");
    }
    Reproducer r;
    r.target_id = j.at("target_id").get<std::string>();
    r.manifest_hash = j.at("manifest_hash").get<std::string>();
    r.testcase = TestCaseFromJson(j.at("testcase"));
    const json& code = j.at("expected_exit_code");
    if (!code.is_null()) r.expected_exit_code = code.get<int>();
    r.expected_locator = LocatorFromJson(j.at("expected_locator"));
    return r;
  } catch (const json::exception& e) {
    throw DecodeError(std::string("reproducer: ") + e.what());
  }
}

void CheckReproducerTarget(const Reproducer& r, const TargetManifest& manifest) {
  std::string actual = ManifestHash(manifest);
  if (r.manifest_hash != actual || r.target_id != manifest.target_id) {
    throw HashMismatch("reproducer was recorded against " + r.target_id +
                       " (" + r.manifest_hash + "), not " +
                       manifest.target_id + " (" + actual + ")");
  }
}

std::string DescribeExitCode(const std::optional<int>& exit_code) {
  if (!exit_code) return "timeout";
  if (*exit_code < 0) return "signal " + std::to_string(-*exit_code);
  return "exit " + std::to_string(*exit_code);
}

ReplayVerdict ReplayReproducer(const Reproducer& r, Executor& executor,
                               std::chrono::milliseconds timeout) {
  CheckReproducerTarget(r, executor.manifest());
  ExecutionRequest request;
  request.testcase = &r.testcase;
  request.timeout = timeout;
  ReplayVerdict v;
  v.observed = executor.Execute(request, nullptr);
  v.reproduced = v.observed.exit_code == r.expected_exit_code &&
                 v.observed.last_statement == r.expected_locator;
  if (v.reproduced) {
    v.summary = "reproduced: " + DescribeExitCode(v.observed.exit_code);
  } else {
    v.summary = "not reproduced: expected " +
                DescribeExitCode(r.expected_exit_code) + " at " +
                DescribeLocator(r.expected_locator) + ", observed " +
                DescribeExitCode(v.observed.exit_code) + " at " +
                DescribeLocator(v.observed.last_statement);
  }
  return v;
}

}  // namespace isoharness
