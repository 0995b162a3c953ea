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

// Test execution in two models.
//
// ThreadedExecutor runs the test body on a watchdog-supervised thread inside
// the calling process. It is fast, but a fatal signal raised by the target
// takes the whole process down with it; that is the contract, not a bug.
// After a timeout the runaway thread is abandoned and the executor is
// marked tainted.
//
// SubprocessExecutor spawns a fresh worker process per test
// (`<harness> worker --shm <name>`), ships the manifest, the remote observer
// specs and the serialized test across a pipe, and collects the reply. Edge
// counters and the progress marker live in shared memory, so a worker that
// dies still leaves behind its coverage and the index of the statement it
// died in. The calling process always survives.
//
// Wire format: docs/ipc.md.

#ifndef ISOHARNESS_EXECUTOR_H_
#define ISOHARNESS_EXECUTOR_H_

#include <sys/types.h>

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "isoharness/manifest.h"
#include "isoharness/observers.h"
#include "isoharness/shared_region.h"
#include "isoharness/target.h"
#include "isoharness/testcase.h"

namespace isoharness {

enum class ExecStatus { kCompleted, kManagedError, kCrashed, kTimedOut };

std::string_view ExecStatusName(ExecStatus status);

struct ExecutionResult {
  ExecStatus status = ExecStatus::kCompleted;
  int32_t managed_code = 0;  // kManagedError
  int signal_number = 0;     // kCrashed
  // 0 for completed and managed errors, -signal for crashes, none for
  // timeouts.
  std::optional<int> exit_code;
  std::vector<uint64_t> edge_hits;
  std::optional<StatementLocator> last_statement;
  std::vector<StatementStatus> per_statement_status;
  std::chrono::nanoseconds wall_time{0};

  bool crashed() const { return status == ExecStatus::kCrashed; }
  bool timed_out() const { return status == ExecStatus::kTimedOut; }
  // Crashed or timed out: the test is crash-revealing.
  bool fatal() const { return crashed() || timed_out(); }
};

// Asks the executing thread to raise `raise_signal` immediately before
// statement `at_statement` starts, i.e. after statement at_statement - 1
// finished.
struct SyntheticFault {
  int raise_signal = 0;
  size_t at_statement = 0;

  friend bool operator==(const SyntheticFault&, const SyntheticFault&) = default;
};

// The fatal signals a synthetic fault may raise: SIGILL, SIGABRT, SIGBUS,
// SIGFPE, SIGSEGV.
bool IsSupportedFaultSignal(int signal_number);
// Throws UnsupportedSignal or ValidationError (at_statement out of range).
void ValidateSyntheticFault(const SyntheticFault& fault, const TestCase& tc);

struct ExecutionRequest {
  const TestCase* testcase = nullptr;
  std::vector<RemoteObserverSpec> remote_observers;
  std::chrono::milliseconds timeout{10'000};
  std::optional<SyntheticFault> synthetic_fault;
};

class Executor {
 public:
  virtual ~Executor() = default;
  // `payloads`, when non-null, receives one payload per remote observer
  // (empty when the execution died before producing them).
  virtual ExecutionResult Execute(const ExecutionRequest& request,
                                  std::vector<ObservationPayload>* payloads) = 0;
  virtual const TargetManifest& manifest() const = 0;
  // Consecutive timed out executions that left a runaway thread behind in
  // this process.
  virtual int consecutive_taints() const { return 0; }
};

class ThreadedExecutor : public Executor {
 public:
  // Loads the target into this process with a private coverage region.
  // Throws LoadError.
  explicit ThreadedExecutor(const TargetManifest& manifest);
  // Uses an existing region (the worker passes its shared segment).
  ThreadedExecutor(const TargetManifest& manifest,
                   std::shared_ptr<SharedRegion> region);

  ExecutionResult Execute(const ExecutionRequest& request,
                          std::vector<ObservationPayload>* payloads) override;
  const TargetManifest& manifest() const override { return manifest_; }

  // True once any execution timed out in this process.
  bool tainted() const { return consecutive_taints_ > 0 || ever_tainted_; }
  int consecutive_taints() const override { return consecutive_taints_; }

 private:
  TargetManifest manifest_;
  std::shared_ptr<SharedRegion> region_;
  std::shared_ptr<Target> target_;
  int consecutive_taints_ = 0;
  bool ever_tainted_ = false;
};

struct SubprocessOptions {
  // Path to the harness binary. Empty: $ISOHARNESS_WORKER_PATH, then the
  // running executable.
  std::string worker_path;
  // Added to the request timeout before the worker is killed.
  std::chrono::milliseconds kill_grace{1000};
  uint64_t address_space_cap = 2ULL << 30;
  bool discard_worker_stderr = true;
};

class SubprocessExecutor : public Executor {
 public:
  explicit SubprocessExecutor(const TargetManifest& manifest,
                              SubprocessOptions options = {});

  ExecutionResult Execute(const ExecutionRequest& request,
                          std::vector<ObservationPayload>* payloads) override;
  const TargetManifest& manifest() const override { return manifest_; }

  pid_t last_worker_pid() const { return last_pid_; }
  const std::string& worker_path() const { return worker_path_; }

 private:
  TargetManifest manifest_;
  std::string manifest_text_;
  std::string manifest_hash_;
  SubprocessOptions options_;
  std::string worker_path_;
  SharedRegion region_;
  pid_t last_pid_ = -1;
};

// Resolves the harness binary used for workers (see SubprocessOptions).
std::string ResolveWorkerPath(const std::string& configured);

// Entry point of `<harness> worker --shm <name>`. Reads one handshake and
// one request from stdin, writes one reply to stdout, returns the process
// exit code.
int RunTestWorker(const std::string& shm_name);

// JSON encoding of a result; edge counters are optional because worker
// replies carry them in shared memory instead.
nlohmann::json ResultToJson(const ExecutionResult& result, bool include_edges);
ExecutionResult ResultFromJson(const nlohmann::json& j);

}  // namespace isoharness

#endif  // ISOHARNESS_EXECUTOR_H_
