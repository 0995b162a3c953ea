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

#include "isoharness/modeselect.h"

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <memory>

#include "isoharness/error.h"
#include "isoharness/executor.h"
#include "isoharness/subprocess.h"

namespace isoharness {

using nlohmann::json;
using std::chrono::milliseconds;

namespace {

constexpr int kSearchWireSchema = 1;

json ConfigToJson(const SearchConfig& c) {
  json observers = json::array();
  for (const auto& o : c.remote_observers) {
    observers.push_back({{"kind", o.kind}, {"config", o.config}});
  }
  return {{"budget_ms", c.budget.count()},
          {"per_test_timeout_ms", c.per_test_timeout.count()},
          {"seed", c.seed},
          {"max_len", c.max_len},
          {"population_size", c.population_size},
          {"offspring_size", c.offspring_size},
          {"immigrant_rate", c.immigrant_rate},
          {"crossover_rate", c.crossover_rate},
          {"max_executions", c.max_executions},
          {"injection",
           {{"rate", c.injection.rate},
            {"signal", c.injection.signal_number},
            {"after_ms", c.injection.after.count()},
            {"once", c.injection.once}}},
          {"taint_limit", c.taint_limit},
          {"remote_observers", std::move(observers)}};
}

SearchConfig ConfigFromJson(const json& j) {
  SearchConfig c;
  c.budget = milliseconds(j.at("budget_ms").get<int64_t>());
  c.per_test_timeout = milliseconds(j.at("per_test_timeout_ms").get<int64_t>());
  c.seed = j.at("seed").get<uint64_t>();
  c.max_len = j.at("max_len").get<size_t>();
  c.population_size = j.at("population_size").get<size_t>();
  c.offspring_size = j.at("offspring_size").get<size_t>();
  c.immigrant_rate = j.at("immigrant_rate").get<double>();
  c.crossover_rate = j.at("crossover_rate").get<double>();
  c.max_executions = j.at("max_executions").get<uint64_t>();
  const json& inj = j.at("injection");
  c.injection.rate = inj.at("rate").get<double>();
  c.injection.signal_number = inj.at("signal").get<int>();
  c.injection.after = milliseconds(inj.at("after_ms").get<int64_t>());
  c.injection.once = inj.at("once").get<bool>();
  c.taint_limit = j.at("taint_limit").get<int>();
  for (const auto& o : j.at("remote_observers")) {
    c.remote_observers.push_back(
        {o.at("kind").get<std::string>(), o.at("config")});
  }
  return c;
}

milliseconds SinceMs(Clock::time_point start) {
  return std::chrono::duration_cast<milliseconds>(Clock::now() - start);
}

struct PhaseResult {
  PhaseRecord record;
  std::optional<SearchOutcome> outcome;
};

PhaseResult RunPhase(const TargetManifest& manifest, const SearchConfig& config,
                     ExecutionModel model, const SupervisorOptions& options,
                     const std::string& worker_path, SupervisedOutcome& out) {
  PhaseResult pr;
  pr.record.model = model;
  pr.record.seed = config.seed;
  pr.record.budget = config.budget;

  json msg = {{"type", "config"},
              {"schema", kSearchWireSchema},
              {"manifest", SerializeManifest(manifest)},
              {"model", std::string(ExecutionModelName(model))},
              {"worker_path", worker_path},
              {"address_space_cap", options.address_space_cap},
              {"discard_worker_stderr", options.discard_worker_stderr},
              {"search", ConfigToJson(config)}};

  SpawnOptions spawn;
  spawn.argv = {worker_path, "worker", "--search"};
  spawn.discard_stderr = options.discard_worker_stderr;
  auto start = Clock::now();
  ChildProcess child = ChildProcess::Spawn<SpawnError>(spawn);
  if (WriteFrame(child.stdin_fd(), msg.dump())) ++out.messages_sent;
  child.CloseStdin();

  auto deadline = start + config.budget + options.grace;
  std::string payload;
  FrameStatus fs = ReadFrame(child.stdout_fd(), payload, deadline);
  std::optional<int> status;
  if (fs == FrameStatus::kOk) {
    ++out.messages_received;
    status = child.WaitUntil(Clock::now() + options.grace);
  } else if (fs != FrameStatus::kTimeout) {
    status = child.WaitUntil(deadline);
  }
  if (!status) {
    child.Kill();
    child.Wait();
  }
  pr.record.elapsed = SinceMs(start);

  if (fs == FrameStatus::kOk) {
    try {
      json reply = json::parse(payload);
      if (reply.at("type") == "error") {
        throw SpawnError("search worker: " +
                         reply.at("message").get<std::string>());
      }
      pr.outcome = SearchOutcomeFromJson(reply.at("outcome"));
      return pr;
    } catch (const json::exception& e) {
      throw ProtocolError(std::string("search worker reply: ") + e.what());
    }
  }

  pr.record.crashed = true;
  if (!status) {
    pr.record.termination = "killed after exceeding budget plus grace";
  } else {
    pr.record.termination = DescribeWaitStatus(*status);
    if (WIFSIGNALED(*status)) {
      pr.record.exit_code = -WTERMSIG(*status);
    } else if (WIFEXITED(*status)) {
      pr.record.exit_code = WEXITSTATUS(*status);
      if (WEXITSTATUS(*status) == kTaintedExitCode) {
        pr.record.termination = "abandoned a wedged target";
      }
    }
  }
  return pr;
}

}  // namespace

std::string_view ModeRequestName(ModeRequest mode) {
  switch (mode) {
    case ModeRequest::kThreaded: return "threaded";
    case ModeRequest::kSubprocess: return "subprocess";
    case ModeRequest::kHeuristic: return "heuristic";
    case ModeRequest::kFallback: return "fallback";
    case ModeRequest::kFallbackHeuristic: return "fallback-heuristic";
  }
  return "?";
}

ModeRequest ParseModeRequest(std::string_view name) {
  if (name == "threaded") return ModeRequest::kThreaded;
  if (name == "subprocess") return ModeRequest::kSubprocess;
  if (name == "heuristic") return ModeRequest::kHeuristic;
  if (name == "fallback") return ModeRequest::kFallback;
  if (name == "fallback-heuristic" || name == "fallback_heuristic") {
    return ModeRequest::kFallbackHeuristic;
  }
  throw ValidationError("unknown mode '" + std::string(name) + "'");
}

bool PermitsRestart(ModeRequest mode) {
  return mode == ModeRequest::kFallback ||
         mode == ModeRequest::kFallbackHeuristic;
}

ExecutionModel ResolveInitialMode(ModeRequest mode,
                                  const TargetManifest& manifest,
                                  const std::set<std::string>& whitelist) {
  switch (mode) {
    case ModeRequest::kThreaded:
    case ModeRequest::kFallback:
      return ExecutionModel::kThreaded;
    case ModeRequest::kSubprocess:
      return ExecutionModel::kSubprocess;
    case ModeRequest::kHeuristic:
    case ModeRequest::kFallbackHeuristic:
      return ClassifyHazard(manifest, whitelist) == HazardClass::kNative
                 ? ExecutionModel::kSubprocess
                 : ExecutionModel::kThreaded;
  }
  return ExecutionModel::kSubprocess;
}

uint64_t PhaseSeed(uint64_t seed, int phase) {
  return seed + static_cast<uint64_t>(phase);
}

SupervisedOutcome RunSupervised(ModeRequest mode, const TargetManifest& manifest,
                                const SearchConfig& config,
                                const std::set<std::string>& whitelist,
                                const SupervisorOptions& options) {
  if (config.budget.count() <= 0) {
    throw ValidationError("search budget must be positive");
  }
  signal(SIGPIPE, SIG_IGN);
  std::string worker_path;
  try {
    worker_path = ResolveWorkerPath(options.worker_path);
  } catch (const WorkerSpawnError& e) {
    throw SpawnError(e.what());
  }

  SupervisedOutcome out;
  out.policy.requested = mode;
  out.policy.resolved_initial = ResolveInitialMode(mode, manifest, whitelist);
  out.policy.budget_total = config.budget;

  ExecutionModel model = out.policy.resolved_initial;
  milliseconds consumed{0};
  for (int phase = 0;; ++phase) {
    SearchConfig phase_config = config;
    phase_config.seed = PhaseSeed(config.seed, phase);
    phase_config.budget = config.budget - consumed;
    phase_config.taint_limit =
        model == ExecutionModel::kThreaded && PermitsRestart(mode)
            ? options.taint_limit
            : 0;
    PhaseResult pr =
        RunPhase(manifest, phase_config, model, options, worker_path, out);
    out.phases.push_back(pr.record);
    if (pr.outcome) {
      out.search = std::move(pr.outcome);
      return out;
    }
    consumed += pr.record.elapsed;
    if (!PermitsRestart(mode) || phase >= options.max_restarts) {
      out.crashed = true;
      return out;
    }
    if (consumed >= config.budget) {
      out.crashed = true;
      out.budget_exhausted = true;
      return out;
    }
    if (!out.policy.restarted) {
      out.policy.budget_consumed_before_restart = consumed;
    }
    out.policy.restarted = true;
    model = ExecutionModel::kSubprocess;
  }
}

int RunSearchWorker() {
  int reply_fd = dup(STDOUT_FILENO);
  dup2(STDERR_FILENO, STDOUT_FILENO);
  auto reply_error = [&](const std::string& message) {
    WriteFrame(reply_fd,
               json{{"type", "error"}, {"message", message}}.dump());
    return 3;
  };

  std::string bytes;
  if (ReadFrame(STDIN_FILENO, bytes) != FrameStatus::kOk) {
    return reply_error("expected a config frame");
  }
  TargetManifest manifest;
  SearchConfig config;
  ExecutionModel model = ExecutionModel::kSubprocess;
  SubprocessOptions sub;
  try {
    json msg = json::parse(bytes);
    if (msg.at("type") != "config" || msg.at("schema") != kSearchWireSchema) {
      return reply_error("bad config frame");
    }
    manifest = ParseManifest(msg.at("manifest").get<std::string>());
    model = msg.at("model") == "threaded" ? ExecutionModel::kThreaded
                                          : ExecutionModel::kSubprocess;
    sub.worker_path = msg.at("worker_path").get<std::string>();
    sub.address_space_cap = msg.at("address_space_cap").get<uint64_t>();
    sub.discard_worker_stderr = msg.at("discard_worker_stderr").get<bool>();
    config = ConfigFromJson(msg.at("search"));
  } catch (const json::exception& e) {
    return reply_error(e.what());
  } catch (const Error& e) {
    return reply_error(e.what());
  }

  SearchOutcome outcome;
  try {
    std::unique_ptr<Executor> executor;
    if (model == ExecutionModel::kThreaded) {
      executor = std::make_unique<ThreadedExecutor>(manifest);
    } else {
      executor = std::make_unique<SubprocessExecutor>(manifest, sub);
    }
    outcome = RunSearch(config, *executor, model);
    if (outcome.tainted_abort) _exit(kTaintedExitCode);
    // The executor is leaked on purpose in threaded mode: an abandoned
    // thread may still be running target code.
    if (model == ExecutionModel::kThreaded) executor.release();
  } catch (const Error& e) {
    return reply_error(e.what());
  }
  WriteFrame(reply_fd,
             json{{"type", "result"}, {"outcome", SearchOutcomeToJson(outcome)}}
                 .dump());
  _exit(0);
}

}  // namespace isoharness
