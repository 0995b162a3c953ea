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

#include "isoharness/executor.h"

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <condition_variable>
#include <cstdlib>
#include <filesystem>
#include <mutex>
#include <thread>

#include "isoharness/error.h"
#include "isoharness/json_codec.h"
#include "isoharness/subprocess.h"

namespace isoharness {

using nlohmann::json;

namespace {

constexpr int kWireSchema = 1;

struct BodyOutcome {
  ExecStatus status = ExecStatus::kCompleted;
  int32_t managed_code = 0;
  size_t last = 0;
  std::vector<StatementStatus> per_statement;
  std::vector<ObservationPayload> payloads;
};

using ObserverList = std::vector<std::unique_ptr<RemoteObserver>>;

ObserverList BuildObservers(const std::vector<RemoteObserverSpec>& specs) {
  ObserverList out;
  for (const auto& s : specs) out.push_back(MakeRemoteObserver(s));
  return out;
}

[[noreturn]] void RaiseFatal(int signal_number) {
  signal(signal_number, SIG_DFL);
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, signal_number);
  pthread_sigmask(SIG_UNBLOCK, &set, nullptr);
  raise(signal_number);
  // A raised SIGFPE/SIGSEGV with default disposition does not return; be
  // explicit for the compiler and for exotic environments.
  std::abort();
}

isoh_value ToValue(const Arg& arg, const std::vector<isoh_value>& returned) {
  isoh_value v{};
  std::visit(
      [&](const auto& a) {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, NullArg>) {
          v.kind = ISOH_NULL;
        } else if constexpr (std::is_same_v<T, IntArg>) {
          v.kind = ISOH_INT;
          v.i = a.value;
        } else if constexpr (std::is_same_v<T, FloatArg>) {
          v.kind = ISOH_FLOAT;
          v.f = a.value;
        } else if constexpr (std::is_same_v<T, BytesArg>) {
          v.kind = ISOH_BYTES;
          v.bytes = a.value.data();
          v.len = a.value.size();
        } else if constexpr (std::is_same_v<T, EnumArg>) {
          v.kind = ISOH_ENUM;
          v.i = a.value;
        } else {
          v.kind = ISOH_HANDLE;
          const isoh_value& r = returned.at(a.statement);
          v.handle = r.kind == ISOH_HANDLE ? r.handle : nullptr;
        }
      },
      arg);
  return v;
}

// Runs the statements in order, publishing progress before each call. A
// managed error ends the test at that statement.
BodyOutcome RunBody(const Target& target, SharedRegion& region,
                    const TestCase& tc, ObserverList& observers,
                    const std::optional<SyntheticFault>& fault) {
  BodyOutcome out;
  out.per_statement.assign(tc.size(), StatementStatus::kNotRun);
  std::vector<isoh_value> returned(tc.size());
  std::vector<isoh_value> args;
  for (size_t k = 0; k < tc.size(); ++k) {
    if (fault && fault->at_statement == k) RaiseFatal(fault->raise_signal);
    region.SetProgress(k + 1);
    for (auto& o : observers) o->BeforeStatement(tc, k);

    const Statement& st = tc.statements[k];
    args.clear();
    for (const auto& a : st.args) args.push_back(ToValue(a, returned));
    isoh_value ret{};
    int32_t code = target.Invoke(target.FunctionIndex(st.callee), args.data(),
                                 static_cast<uint32_t>(args.size()), &ret);
    StatementStatus status =
        code == 0 ? StatementStatus::kOk : StatementStatus::kManagedError;
    out.per_statement[k] = status;
    for (auto& o : observers) o->AfterStatement(tc, k, status, code);
    out.last = k;
    if (code != 0) {
      out.status = ExecStatus::kManagedError;
      out.managed_code = code;
      break;
    }
    returned[k] = ret;
  }
  for (auto& o : observers) out.payloads.push_back(o->OnTestEnd(tc));
  return out;
}

// Fills the locator and per-statement status of a test that never reported
// back, from the progress marker alone.
void ApplyProgressMarker(ExecutionResult& r, const TestCase& tc,
                         uint64_t marker, StatementStatus died_as) {
  r.per_statement_status.assign(tc.size(), StatementStatus::kNotRun);
  if (marker == 0 || marker > tc.size()) {
    r.last_statement.reset();
    return;
  }
  size_t at = static_cast<size_t>(marker - 1);
  for (size_t i = 0; i < at; ++i) {
    r.per_statement_status[i] = StatementStatus::kOk;
  }
  r.per_statement_status[at] = died_as;
  r.last_statement = tc.LocatorAt(at);
}

void CheckRunnable(const ExecutionRequest& request,
                   const TargetManifest& manifest) {
  if (request.testcase == nullptr) throw ValidationError("no test case given");
  std::string err = CheckTestCase(*request.testcase, manifest, SIZE_MAX);
  if (!err.empty()) throw ValidationError("invalid test case: " + err);
  if (request.synthetic_fault) {
    ValidateSyntheticFault(*request.synthetic_fault, *request.testcase);
  }
}

json EncodeFault(const std::optional<SyntheticFault>& fault) {
  if (!fault) return nullptr;
  return {{"raise_signal", fault->raise_signal},
          {"at_statement", fault->at_statement}};
}

std::optional<SyntheticFault> DecodeFault(const json& j) {
  if (j.is_null()) return std::nullopt;
  return SyntheticFault{j.at("raise_signal").get<int>(),
                        j.at("at_statement").get<size_t>()};
}

ExecStatus ExecStatusFromName(std::string_view name) {
  for (auto s : {ExecStatus::kCompleted, ExecStatus::kManagedError,
                 ExecStatus::kCrashed, ExecStatus::kTimedOut}) {
    if (ExecStatusName(s) == name) return s;
  }
  throw DecodeError("unknown execution status '" + std::string(name) + "'");
}

}  // namespace

std::string_view ExecStatusName(ExecStatus status) {
  switch (status) {
    case ExecStatus::kCompleted: return "completed";
    case ExecStatus::kManagedError: return "managed_error";
    case ExecStatus::kCrashed: return "crashed";
    case ExecStatus::kTimedOut: return "timed_out";
  }
  return "?";
}

bool IsSupportedFaultSignal(int s) {
  return s == SIGILL || s == SIGABRT || s == SIGBUS || s == SIGFPE ||
         s == SIGSEGV;
}

void ValidateSyntheticFault(const SyntheticFault& fault, const TestCase& tc) {
  if (!IsSupportedFaultSignal(fault.raise_signal)) {
    throw UnsupportedSignal("cannot inject signal " +
                            std::to_string(fault.raise_signal));
  }
  if (fault.at_statement >= tc.size()) {
    throw ValidationError("synthetic fault at statement " +
                          std::to_string(fault.at_statement) +
                          " of a test with " + std::to_string(tc.size()));
  }
}

// ---------------------------------------------------------------------------
// Threaded

ThreadedExecutor::ThreadedExecutor(const TargetManifest& manifest)
    : ThreadedExecutor(manifest, std::make_shared<SharedRegion>(
                                     SharedRegion::CreateAnonymous(
                                         manifest.coverage_edges))) {}

ThreadedExecutor::ThreadedExecutor(const TargetManifest& manifest,
                                   std::shared_ptr<SharedRegion> region)
    : manifest_(manifest),
      region_(std::move(region)),
      target_(Target::Load(manifest_, *region_)) {}

ExecutionResult ThreadedExecutor::Execute(
    const ExecutionRequest& request, std::vector<ObservationPayload>* payloads) {
  CheckRunnable(request, manifest_);
  const TestCase& tc = *request.testcase;

  struct Shared {
    std::mutex mu;
    std::condition_variable cv;
    bool done = false;
    BodyOutcome outcome;
  };
  auto shared = std::make_shared<Shared>();
  auto observers =
      std::make_shared<ObserverList>(BuildObservers(request.remote_observers));

  region_->Reset();
  auto start = Clock::now();
  std::thread([shared, observers, target = target_, region = region_, tc,
               fault = request.synthetic_fault]() {
    BodyOutcome outcome = RunBody(*target, *region, tc, *observers, fault);
    std::lock_guard<std::mutex> lock(shared->mu);
    shared->outcome = std::move(outcome);
    shared->done = true;
    shared->cv.notify_all();
  }).detach();

  ExecutionResult r;
  bool finished;
  {
    std::unique_lock<std::mutex> lock(shared->mu);
    finished = shared->cv.wait_until(lock, start + request.timeout,
                                     [&] { return shared->done; });
    if (finished) {
      BodyOutcome& o = shared->outcome;
      r.status = o.status;
      r.managed_code = o.managed_code;
      r.exit_code = 0;
      r.last_statement = tc.LocatorAt(o.last);
      r.per_statement_status = std::move(o.per_statement);
      if (payloads != nullptr) *payloads = std::move(o.payloads);
    }
  }
  r.wall_time = Clock::now() - start;
  r.edge_hits = region_->SnapshotCounters();
  if (finished) {
    target_->EndExecution();
    consecutive_taints_ = 0;
  } else {
    // The thread keeps running; nothing it touches is released.
    r.status = ExecStatus::kTimedOut;
    r.exit_code.reset();
    ApplyProgressMarker(r, tc, region_->progress(), StatementStatus::kTimedOut);
    if (payloads != nullptr) payloads->clear();
    ++consecutive_taints_;
    ever_tainted_ = true;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Subprocess

std::string ResolveWorkerPath(const std::string& configured) {
  if (!configured.empty()) return configured;
  if (const char* env = std::getenv("ISOHARNESS_WORKER_PATH");
      env != nullptr && *env != '\0') {
    return env;
  }
  std::error_code ec;
  auto self = std::filesystem::read_symlink("/proc/self/exe", ec);
  if (ec) throw WorkerSpawnError("cannot locate the harness executable");
  return self.string();
}

SubprocessExecutor::SubprocessExecutor(const TargetManifest& manifest,
                                       SubprocessOptions options)
    : manifest_(manifest),
      manifest_text_(SerializeManifest(manifest)),
      manifest_hash_(ManifestHash(manifest)),
      options_(std::move(options)),
      worker_path_(ResolveWorkerPath(options_.worker_path)),
      region_(SharedRegion::CreateNamed(UniqueRegionName(),
                                        manifest.coverage_edges)) {
  // Writing to a worker that already died must not kill us.
  signal(SIGPIPE, SIG_IGN);
}

ExecutionResult SubprocessExecutor::Execute(
    const ExecutionRequest& request, std::vector<ObservationPayload>* payloads) {
  CheckRunnable(request, manifest_);
  const TestCase& tc = *request.testcase;
  region_.Reset();

  json handshake = {{"type", "handshake"},
                    {"schema", kWireSchema},
                    {"manifest_hash", manifest_hash_},
                    {"manifest", manifest_text_}};
  json req = {{"type", "request"},
              {"testcase", TestCaseToJson(tc)},
              {"observers", SerializeObserverSpecs(request.remote_observers)},
              {"timeout_ms", request.timeout.count()},
              {"synthetic_fault", EncodeFault(request.synthetic_fault)}};

  auto start = Clock::now();
  SpawnOptions spawn;
  spawn.argv = {worker_path_, "worker", "--shm", region_.name()};
  spawn.address_space_cap = options_.address_space_cap;
  spawn.discard_stderr = options_.discard_worker_stderr;
  ChildProcess child = ChildProcess::Spawn<WorkerSpawnError>(spawn);
  last_pid_ = child.pid();

  // Write failures mean the worker is already gone; its wait status tells
  // the rest of the story.
  if (WriteFrame(child.stdin_fd(), handshake.dump())) {
    WriteFrame(child.stdin_fd(), req.dump());
  }
  child.CloseStdin();

  auto deadline = start + request.timeout + options_.kill_grace;
  std::string payload;
  FrameStatus fs = ReadFrame(child.stdout_fd(), payload, deadline);

  ExecutionResult r;
  if (fs == FrameStatus::kTimeout) {
    child.Kill();
    child.Wait();
    r.status = ExecStatus::kTimedOut;
    ApplyProgressMarker(r, tc, region_.progress(), StatementStatus::kTimedOut);
  } else if (fs == FrameStatus::kOk) {
    json reply;
    try {
      reply = json::parse(payload);
    } catch (const json::parse_error& e) {
      throw ProtocolError(std::string("worker reply: ") + e.what());
    }
    std::string type = reply.value("type", "");
    if (type == "error") {
      std::string kind = reply.value("kind", "");
      std::string message = reply.value("message", "");
      if (kind == "load") throw LoadError(message);
      throw ProtocolError("worker error (" + kind + "): " + message);
    }
    if (type != "reply") throw ProtocolError("unexpected worker frame '" + type + "'");
    try {
      r = ResultFromJson(reply.at("result"));
      if (payloads != nullptr) {
        payloads->clear();
        for (const auto& p : reply.at("payloads")) payloads->push_back(p);
      }
    } catch (const json::exception& e) {
      throw ProtocolError(std::string("worker reply: ") + e.what());
    } catch (const DecodeError& e) {
      throw ProtocolError(std::string("worker reply: ") + e.what());
    }
    if (!child.WaitUntil(Clock::now() + options_.kill_grace)) {
      child.Kill();
      child.Wait();
    }
  } else {
    // No reply: the worker died. Give it until the deadline to be reaped.
    auto status = child.WaitUntil(deadline);
    if (!status) {
      child.Kill();
      child.Wait();
      r.status = ExecStatus::kTimedOut;
      ApplyProgressMarker(r, tc, region_.progress(), StatementStatus::kTimedOut);
    } else if (WIFSIGNALED(*status)) {
      r.status = ExecStatus::kCrashed;
      r.signal_number = WTERMSIG(*status);
      r.exit_code = -r.signal_number;
      ApplyProgressMarker(r, tc, region_.progress(), StatementStatus::kCrashed);
    } else {
      throw ProtocolError("worker " + DescribeWaitStatus(*status) +
                          " without a reply");
    }
    if (payloads != nullptr) payloads->clear();
  }
  r.wall_time = Clock::now() - start;
  r.edge_hits = region_.SnapshotCounters();
  return r;
}

// ---------------------------------------------------------------------------
// Worker side

int RunTestWorker(const std::string& shm_name) {
  // Keep the reply channel private; anything the target prints goes to
  // stderr.
  int reply_fd = dup(STDOUT_FILENO);
  dup2(STDERR_FILENO, STDOUT_FILENO);
  auto reply_error = [&](const std::string& kind, const std::string& message) {
    WriteFrame(reply_fd,
               json{{"type", "error"}, {"kind", kind}, {"message", message}}
                   .dump());
    return 3;
  };

  std::string handshake_bytes, request_bytes;
  if (ReadFrame(STDIN_FILENO, handshake_bytes) != FrameStatus::kOk ||
      ReadFrame(STDIN_FILENO, request_bytes) != FrameStatus::kOk) {
    return reply_error("protocol", "expected handshake and request frames");
  }

  std::shared_ptr<SharedRegion> region;
  TargetManifest manifest;
  TestCase tc;
  ExecutionRequest request;
  try {
    json hs = json::parse(handshake_bytes);
    if (hs.at("type") != "handshake" || hs.at("schema") != kWireSchema) {
      return reply_error("protocol", "bad handshake");
    }
    manifest = ParseManifest(hs.at("manifest").get<std::string>());
    if (ManifestHash(manifest) != hs.at("manifest_hash").get<std::string>()) {
      return reply_error("hash", "manifest hash mismatch");
    }
    json rq = json::parse(request_bytes);
    if (rq.at("type") != "request") return reply_error("protocol", "bad request");
    tc = TestCaseFromJson(rq.at("testcase"));
    request.testcase = &tc;
    request.remote_observers =
        DeserializeObserverSpecs(rq.at("observers").get<std::string>());
    request.timeout = std::chrono::milliseconds(rq.at("timeout_ms").get<int64_t>());
    request.synthetic_fault = DecodeFault(rq.at("synthetic_fault"));
    region = std::make_shared<SharedRegion>(SharedRegion::OpenNamed(shm_name));
  } catch (const json::exception& e) {
    return reply_error("protocol", e.what());
  } catch (const Error& e) {
    return reply_error("protocol", e.what());
  }

  std::unique_ptr<ThreadedExecutor> executor;
  try {
    executor = std::make_unique<ThreadedExecutor>(manifest, region);
  } catch (const Error& e) {
    return reply_error("load", e.what());
  }

  std::vector<ObservationPayload> payloads;
  ExecutionResult result;
  try {
    result = executor->Execute(request, &payloads);
  } catch (const Error& e) {
    return reply_error("execute", e.what());
  }
  json reply = {{"type", "reply"},
                {"result", ResultToJson(result, /*include_edges=*/false)},
                {"payloads", payloads}};
  WriteFrame(reply_fd, reply.dump());
  // Skip destructors: an abandoned thread may still be inside the target.
  _exit(0);
}

// ---------------------------------------------------------------------------
// Encoding

json ResultToJson(const ExecutionResult& r, bool include_edges) {
  json per = json::array();
  for (auto s : r.per_statement_status) per.push_back(StatementStatusName(s));
  json j = {{"status", ExecStatusName(r.status)},
            {"managed_code", r.managed_code},
            {"signal", r.signal_number},
            {"exit_code", r.exit_code ? json(*r.exit_code) : json(nullptr)},
            {"last_statement", LocatorToJson(r.last_statement)},
            {"per_statement", std::move(per)},
            {"wall_ns", r.wall_time.count()}};
  if (include_edges) j["edge_hits"] = r.edge_hits;
  return j;
}

ExecutionResult ResultFromJson(const json& j) {
  try {
    ExecutionResult r;
    r.status = ExecStatusFromName(j.at("status").get<std::string>());
    r.managed_code = j.at("managed_code").get<int32_t>();
    r.signal_number = j.at("signal").get<int>();
    if (!j.at("exit_code").is_null()) r.exit_code = j["exit_code"].get<int>();
    r.last_statement = LocatorFromJson(j.at("last_statement"));
    for (const auto& s : j.at("per_statement")) {
      r.per_statement_status.push_back(
          StatementStatusFromName(s.get<std::string>()));
    }
    r.wall_time = std::chrono::nanoseconds(j.at("wall_ns").get<int64_t>());
    if (j.contains("edge_hits")) {
      r.edge_hits = j["edge_hits"].get<std::vector<uint64_t>>();
    }
    return r;
  } catch (const json::exception& e) {
    throw DecodeError(std::string("execution result: ") + e.what());
  }
}

}  // namespace isoharness
