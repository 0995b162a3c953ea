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

// Observers come in two kinds.
//
// A RemoteObserver runs next to the test body, possibly inside a worker
// process. It is described entirely by (kind, config) so that it can be
// rebuilt on the other side of a process boundary; every execution gets a
// fresh instance. At test end it yields a JSON ObservationPayload.
//
// A MainObserver lives in the harness process, consumes results and
// payloads, and may keep state across executions. It never crosses a
// process boundary.

#ifndef ISOHARNESS_OBSERVERS_H_
#define ISOHARNESS_OBSERVERS_H_

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "isoharness/testcase.h"

namespace isoharness {

struct ExecutionResult;

using ObservationPayload = nlohmann::json;

enum class StatementStatus { kNotRun, kOk, kManagedError, kCrashed, kTimedOut };

std::string_view StatementStatusName(StatementStatus s);
StatementStatus StatementStatusFromName(std::string_view name);

class RemoteObserver {
 public:
  virtual ~RemoteObserver() = default;

  virtual std::string Kind() const = 0;
  virtual nlohmann::json Config() const { return nlohmann::json::object(); }

  virtual void BeforeStatement(const TestCase& /*tc*/, size_t /*index*/) {}
  virtual void AfterStatement(const TestCase& /*tc*/, size_t /*index*/,
                              StatementStatus /*status*/, int32_t /*code*/) {}
  virtual ObservationPayload OnTestEnd(const TestCase& tc) = 0;
};

struct RemoteObserverSpec {
  std::string kind;
  nlohmann::json config = nlohmann::json::object();

  friend bool operator==(const RemoteObserverSpec&,
                         const RemoteObserverSpec&) = default;
};

// Builds a fresh observer. Throws ProtocolError for an unknown kind.
std::unique_ptr<RemoteObserver> MakeRemoteObserver(
    const RemoteObserverSpec& spec);

std::string SerializeObserverSpecs(std::span<const RemoteObserverSpec> specs);
std::vector<RemoteObserverSpec> DeserializeObserverSpecs(std::string_view bytes);

// Records how far each statement got and how long it took.
// Config: {"timing": bool}. Payload: {"statements": [{"index", "status",
// "code", "ns"?}]}.
class StatementTraceObserver : public RemoteObserver {
 public:
  static constexpr const char* kKind = "statement_trace";
  explicit StatementTraceObserver(bool timing = false) : timing_(timing) {}

  std::string Kind() const override { return kKind; }
  nlohmann::json Config() const override { return {{"timing", timing_}}; }
  void BeforeStatement(const TestCase& tc, size_t index) override;
  void AfterStatement(const TestCase& tc, size_t index, StatementStatus status,
                      int32_t code) override;
  ObservationPayload OnTestEnd(const TestCase& tc) override;

 private:
  bool timing_;
  int64_t started_ns_ = 0;
  nlohmann::json entries_ = nlohmann::json::array();
};

// Counts calls per callee. Payload: {"calls": {"<callee>": n}, "errors": n}.
class CallCensusObserver : public RemoteObserver {
 public:
  static constexpr const char* kKind = "call_census";

  std::string Kind() const override { return kKind; }
  void AfterStatement(const TestCase& tc, size_t index, StatementStatus status,
                      int32_t code) override;
  ObservationPayload OnTestEnd(const TestCase& tc) override;

 private:
  nlohmann::json calls_ = nlohmann::json::object();
  int64_t errors_ = 0;
};

class MainObserver {
 public:
  virtual ~MainObserver() = default;
  virtual void OnExecution(const TestCase& tc, const ExecutionResult& result,
                           std::span<const ObservationPayload> payloads) = 0;
};

}  // namespace isoharness

#endif  // ISOHARNESS_OBSERVERS_H_
