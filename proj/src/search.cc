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

#include "isoharness/search.h"

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "isoharness/error.h"
#include "isoharness/json_codec.h"
#include "isoharness/subprocess.h"
#include "isoharness/util.h"

namespace isoharness {

using nlohmann::json;

namespace {

constexpr uint64_t kInjectionSalt = 0x494e4a4543540001ULL;

struct Individual {
  TestCase tc;
  size_t new_goals = 0;  // goals this test covered first
  size_t covered = 0;    // goals this test hits at all
};

// Prefers tests that opened more goals, then broader tests, then shorter.
bool Better(const Individual& a, const Individual& b) {
  if (a.new_goals != b.new_goals) return a.new_goals > b.new_goals;
  if (a.covered != b.covered) return a.covered > b.covered;
  return a.tc.size() < b.tc.size();
}

const Individual& Tournament(const std::vector<Individual>& pop,
                             std::mt19937_64& rng) {
  std::uniform_int_distribution<size_t> pick(0, pop.size() - 1);
  const Individual& a = pop[pick(rng)];
  const Individual& b = pop[pick(rng)];
  return Better(b, a) ? b : a;
}

}  // namespace

std::string_view ExecutionModelName(ExecutionModel model) {
  return model == ExecutionModel::kThreaded ? "threaded" : "subprocess";
}

std::vector<int> Fitness(const ExecutionResult& result, uint32_t goals) {
  if (result.edge_hits.size() != goals) {
    throw ValidationError("edge vector has " +
                          std::to_string(result.edge_hits.size()) +
                          " entries, expected " + std::to_string(goals));
  }
  std::vector<int> out(goals);
  for (uint32_t i = 0; i < goals; ++i) out[i] = result.edge_hits[i] > 0 ? 0 : 1;
  return out;
}

size_t CoverageArchive::Update(const TestCase& tc,
                               std::span<const uint64_t> edge_hits) {
  size_t fresh = 0;
  for (uint32_t i = 0; i < goals_ && i < edge_hits.size(); ++i) {
    if (edge_hits[i] == 0) continue;
    auto it = best_.find(i);
    if (it == best_.end()) {
      best_.emplace(i, tc);
      ++fresh;
    } else if (tc.size() < it->second.size()) {
      it->second = tc;
    }
  }
  return fresh;
}

const TestCase* CoverageArchive::Best(uint32_t goal) const {
  auto it = best_.find(goal);
  return it == best_.end() ? nullptr : &it->second;
}

std::vector<TestCase> CoverageArchive::Tests() const {
  std::vector<TestCase> out;
  std::set<std::string> seen;
  for (const auto& [goal, tc] : best_) {
    if (seen.insert(SerializeTestCase(tc)).second) out.push_back(tc);
  }
  return out;
}

SearchOutcome RunSearch(const SearchConfig& config, Executor& executor,
                        ExecutionModel model,
                        std::span<MainObserver* const> observers) {
  const TargetManifest& manifest = executor.manifest();
  if (config.budget.count() <= 0) {
    throw ValidationError("search budget must be positive");
  }

  std::mt19937_64 rng(config.seed);
  std::mt19937_64 injection_rng(config.seed ^ kInjectionSalt);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  GenerationOptions gen;
  gen.max_len = config.max_len;

  SearchOutcome out;
  out.total = manifest.coverage_edges;
  CoverageArchive archive(manifest.coverage_edges);
  std::vector<Individual> population;
  bool injected_once = false;

  const auto start = Clock::now();
  auto elapsed = [&] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() -
                                                                 start);
  };

  while (elapsed() < config.budget &&
         (config.max_executions == 0 ||
          out.executions < config.max_executions)) {
    uint64_t op_seed = rng();
    TestCase tc;
    if (population.size() < config.population_size ||
        unit(rng) < config.immigrant_rate) {
      tc = RandomTest(manifest, op_seed, gen);
    } else {
      const Individual& parent = Tournament(population, rng);
      if (population.size() >= 2 && unit(rng) < config.crossover_rate) {
        const Individual& other = Tournament(population, rng);
        tc = Crossover(parent.tc, other.tc, manifest, op_seed, gen);
        if (unit(rng) < 0.5) tc = Mutate(tc, manifest, SplitMix64(op_seed), gen);
      } else {
        tc = Mutate(parent.tc, manifest, op_seed, gen);
      }
      if (tc.size() == 0) tc = RandomTest(manifest, op_seed, gen);
    }

    ExecutionRequest request;
    request.testcase = &tc;
    request.remote_observers = config.remote_observers;
    request.timeout = config.per_test_timeout;
    const FaultInjectionConfig& inj = config.injection;
    if (inj.rate > 0.0 && !(inj.once && injected_once) &&
        elapsed() >= inj.after) {
      bool fire = unit(injection_rng) < inj.rate;
      size_t at = std::uniform_int_distribution<size_t>(0, tc.size() - 1)(
          injection_rng);
      if (fire) {
        request.synthetic_fault = SyntheticFault{inj.signal_number, at};
        injected_once = true;
        ++out.injected_faults;
      }
    }

    std::vector<ObservationPayload> payloads;
    ExecutionResult result = executor.Execute(request, &payloads);
    ++out.executions;
    for (MainObserver* o : observers) o->OnExecution(tc, result, payloads);

    if (result.fatal()) {
      if (result.timed_out()) ++out.timeouts;
      if (model == ExecutionModel::kSubprocess) {
        out.crash_queue.push_back(
            {tc, result, request.synthetic_fault.has_value()});
      }
      if (model == ExecutionModel::kThreaded && config.taint_limit > 0 &&
          executor.consecutive_taints() >= config.taint_limit) {
        out.tainted_abort = true;
        out.timeline.push_back(
            {elapsed().count(), archive.covered(), archive.goals()});
        break;
      }
    } else {
      if (result.status == ExecStatus::kManagedError) ++out.managed_errors;
      Individual ind;
      ind.new_goals = archive.Update(tc, result.edge_hits);
      ind.covered = static_cast<size_t>(std::count_if(
          result.edge_hits.begin(), result.edge_hits.end(),
          [](uint64_t h) { return h > 0; }));
      ind.tc = std::move(tc);
      if (population.size() < config.population_size) {
        population.push_back(std::move(ind));
      } else {
        auto worst = std::min_element(
            population.begin(), population.end(),
            [](const Individual& a, const Individual& b) { return Better(b, a); });
        if (!Better(*worst, ind)) *worst = std::move(ind);
      }
    }
    out.timeline.push_back(
        {elapsed().count(), archive.covered(), archive.goals()});
  }

  out.covered = archive.covered();
  out.final_suite = archive.Tests();
  if (archive.goals() == 0) {
    // Nothing to cover: keep the distinct surviving population instead.
    std::set<std::string> seen;
    for (const auto& ind : population) {
      if (seen.insert(SerializeTestCase(ind.tc)).second) {
        out.final_suite.push_back(ind.tc);
      }
    }
  }
  return out;
}

void SearchStatistics::OnExecution(const TestCase&,
                                   const ExecutionResult& result,
                                   std::span<const ObservationPayload>) {
  ++executions_;
  ++by_status_[result.status];
  wall_ += result.wall_time;
}

uint64_t SearchStatistics::count(ExecStatus status) const {
  auto it = by_status_.find(status);
  return it == by_status_.end() ? 0 : it->second;
}

json SearchOutcomeToJson(const SearchOutcome& o) {
  json suite = json::array();
  for (const auto& tc : o.final_suite) suite.push_back(TestCaseToJson(tc));
  json queue = json::array();
  for (const auto& c : o.crash_queue) {
    queue.push_back({{"testcase", TestCaseToJson(c.testcase)},
                     {"result", ResultToJson(c.result, true)},
                     {"injected", c.injected}});
  }
  json timeline = json::array();
  for (const auto& p : o.timeline) {
    timeline.push_back({p.elapsed_ms, p.covered, p.total});
  }
  return {{"final_suite", std::move(suite)},
          {"crash_queue", std::move(queue)},
          {"timeline", std::move(timeline)},
          {"executions", o.executions},
          {"injected_faults", o.injected_faults},
          {"managed_errors", o.managed_errors},
          {"timeouts", o.timeouts},
          {"covered", o.covered},
          {"total", o.total},
          {"tainted_abort", o.tainted_abort}};
}

SearchOutcome SearchOutcomeFromJson(const json& j) {
  try {
    SearchOutcome o;
    for (const auto& tc : j.at("final_suite")) {
      o.final_suite.push_back(TestCaseFromJson(tc));
    }
    for (const auto& c : j.at("crash_queue")) {
      o.crash_queue.push_back({TestCaseFromJson(c.at("testcase")),
                               ResultFromJson(c.at("result")),
                               c.at("injected").get<bool>()});
    }
    for (const auto& p : j.at("timeline")) {
      o.timeline.push_back({p.at(0).get<int64_t>(), p.at(1).get<uint32_t>(),
                            p.at(2).get<uint32_t>()});
    }
    o.executions = j.at("executions").get<uint64_t>();
    o.injected_faults = j.at("injected_faults").get<uint64_t>();
    o.managed_errors = j.at("managed_errors").get<uint64_t>();
    o.timeouts = j.at("timeouts").get<uint64_t>();
    o.covered = j.at("covered").get<uint32_t>();
    o.total = j.at("total").get<uint32_t>();
    o.tainted_abort = j.at("tainted_abort").get<bool>();
    return o;
  } catch (const json::exception& e) {
    throw DecodeError(std::string("search outcome: ") + e.what());
  }
}

std::string TimelineCsv(std::span<const TimelinePoint> timeline) {
  std::ostringstream os;
  os << "elapsed_ms,covered,total\n";
  for (const auto& p : timeline) {
    os << p.elapsed_ms << "," << p.covered << "," << p.total << "\n";
  }
  return os.str();
}

}  // namespace isoharness
