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

#include "isoharness/observers.h"

#include <chrono>

#include "isoharness/error.h"

namespace isoharness {

using nlohmann::json;

namespace {
int64_t NowNs() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}
}  // namespace

std::string_view StatementStatusName(StatementStatus s) {
  switch (s) {
    case StatementStatus::kNotRun: return "not_run";
    case StatementStatus::kOk: return "ok";
    case StatementStatus::kManagedError: return "managed_error";
    case StatementStatus::kCrashed: return "crashed";
    case StatementStatus::kTimedOut: return "timed_out";
  }
  return "?";
}

StatementStatus StatementStatusFromName(std::string_view name) {
  for (auto s : {StatementStatus::kNotRun, StatementStatus::kOk,
                 StatementStatus::kManagedError, StatementStatus::kCrashed,
                 StatementStatus::kTimedOut}) {
    if (StatementStatusName(s) == name) return s;
  }
  throw DecodeError("unknown statement status '" + std::string(name) + "'");
}

std::unique_ptr<RemoteObserver> MakeRemoteObserver(
    const RemoteObserverSpec& spec) {
  if (spec.kind == StatementTraceObserver::kKind) {
    bool timing = spec.config.is_object() && spec.config.contains("timing") &&
                  spec.config["timing"].is_boolean() &&
                  spec.config["timing"].get<bool>();
    return std::make_unique<StatementTraceObserver>(timing);
  }
  if (spec.kind == CallCensusObserver::kKind) {
    return std::make_unique<CallCensusObserver>();
  }
  throw ProtocolError("unknown remote observer kind '" + spec.kind + "'");
}

std::string SerializeObserverSpecs(std::span<const RemoteObserverSpec> specs) {
  json arr = json::array();
  for (const auto& s : specs) {
    arr.push_back({{"kind", s.kind}, {"config", s.config}});
  }
  return arr.dump();
}

std::vector<RemoteObserverSpec> DeserializeObserverSpecs(
    std::string_view bytes) {
  std::vector<RemoteObserverSpec> out;
  try {
    json arr = json::parse(bytes);
    if (!arr.is_array()) throw ProtocolError("observer list must be an array");
    for (const auto& s : arr) {
      out.push_back({s.at("kind").get<std::string>(), s.at("config")});
    }
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("observer list: ") + e.what());
  }
  return out;
}

void StatementTraceObserver::BeforeStatement(const TestCase&, size_t) {
  if (timing_) started_ns_ = NowNs();
}

void StatementTraceObserver::AfterStatement(const TestCase&, size_t index,
                                            StatementStatus status,
                                            int32_t code) {
  json entry = {{"index", index},
                {"status", StatementStatusName(status)},
                {"code", code}};
  if (timing_) entry["ns"] = NowNs() - started_ns_;
  entries_.push_back(std::move(entry));
}

ObservationPayload StatementTraceObserver::OnTestEnd(const TestCase&) {
  return {{"statements", entries_}};
}

void CallCensusObserver::AfterStatement(const TestCase& tc, size_t index,
                                        StatementStatus status, int32_t) {
  const std::string& callee = tc.statements[index].callee;
  calls_[callee] = calls_.value(callee, 0) + 1;
  if (status == StatementStatus::kManagedError) ++errors_;
}

ObservationPayload CallCensusObserver::OnTestEnd(const TestCase&) {
  return {{"calls", calls_}, {"errors", errors_}};
}

}  // namespace isoharness
