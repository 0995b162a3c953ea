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

#include "isoharness/cli.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "isoharness/error.h"
#include "isoharness/executor.h"
#include "isoharness/reproducer.h"
#include "isoharness/stats.h"
#include "isoharness/target.h"
#include "isoharness/util.h"

namespace isoharness {

namespace fs = std::filesystem;
using nlohmann::json;
using std::chrono::milliseconds;

namespace {

constexpr std::string_view kBuiltinPrefix = "builtin:";

milliseconds Seconds(double s, const char* what) {
  if (!(s > 0)) throw ValidationError(std::string(what) + " must be positive");
  return milliseconds(static_cast<int64_t>(std::llround(s * 1000.0)));
}

// A manifest path, or "builtin:<name>" for a harness-internal stub.
TargetManifest ResolveManifest(const fs::path& path) {
  std::string s = path.string();
  if (s.starts_with(kBuiltinPrefix)) {
    return BuiltinManifest(s.substr(kBuiltinPrefix.size()));
  }
  return LoadManifest(path);
}

std::string NumberedName(size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04zu.json", i);
  return buf;
}

void MakeDirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

struct TriageSettings {
  ConfirmOptions confirm;
  ExclusionConfig exclusions;
  DedupeKey key = DedupeKey::kCallee;
  size_t max_replays_per_key = 3;
};

struct TriageOutput {
  std::vector<CrashReport> reports;  // replayed ones
  std::vector<CrashCause> causes;
  size_t candidates = 0;
  size_t excluded = 0;
  size_t skipped = 0;  // over the per-key replay cap
};

TriageOutput Triage(const std::vector<CrashCandidate>& queue,
                    Executor& executor, const TriageSettings& s) {
  TriageOutput out;
  out.candidates = queue.size();

  // Exclusions only look at the recorded outcome, so apply them before
  // paying for replays.
  std::vector<std::pair<CrashReport, const CrashCandidate*>> kept;
  for (const CrashCandidate& c : queue) {
    CrashReport r = ReportFromCandidate(c.testcase, c.result);
    std::vector<CrashReport> one{r};
    if (FilterExclusions(one, s.exclusions).empty()) {
      ++out.excluded;
      continue;
    }
    kept.emplace_back(std::move(r), &c);
  }

  std::map<CauseKey, std::vector<const CrashCandidate*>> by_key;
  for (const auto& [r, c] : kept) by_key[KeyOf(r, s.key)].push_back(c);
  std::vector<CrashCandidate> to_replay;
  for (auto& [key, members] : by_key) {
    std::stable_sort(members.begin(), members.end(),
                     [](const CrashCandidate* a, const CrashCandidate* b) {
                       return a->testcase.size() < b->testcase.size();
                     });
    size_t n = s.max_replays_per_key == 0
                   ? members.size()
                   : std::min(members.size(), s.max_replays_per_key);
    for (size_t i = 0; i < n; ++i) to_replay.push_back(*members[i]);
    out.skipped += members.size() - n;
  }

  out.reports = Confirm(to_replay, executor, s.confirm);
  out.causes = Dedupe(out.reports, s.key);
  return out;
}

void WriteTriageArtifacts(const TargetManifest& manifest,
                          const TriageOutput& t, const fs::path& dir,
                          std::ostream& out) {
  MakeDirs(dir / "crashes");
  for (size_t i = 0; i < t.causes.size(); ++i) {
    const CrashReport& rep = t.causes[i].representative;
    Reproducer r;
    r.target_id = manifest.target_id;
    r.manifest_hash = ManifestHash(manifest);
    r.testcase = rep.testcase;
    r.expected_exit_code = rep.exit_code;
    r.expected_locator = rep.locator;
    WriteFile(dir / "crashes" / NumberedName(i), SerializeReproducer(r));
  }
  json reports = json::array();
  for (const auto& r : t.reports) reports.push_back(CrashReportToJson(r));
  size_t confirmed = static_cast<size_t>(std::count_if(
      t.reports.begin(), t.reports.end(),
      [](const CrashReport& r) { return r.reproduced; }));
  json doc = {{"candidates", t.candidates},
              {"excluded", t.excluded},
              {"skipped", t.skipped},
              {"replayed", t.reports.size()},
              {"confirmed", confirmed},
              {"causes", CausesToJson(t.causes)},
              {"reports", std::move(reports)}};
  WriteFile(dir / "triage.json", doc.dump(2) + "\n");
  std::string table = RenderFaultTable(t.causes);
  WriteFile(dir / "triage.txt", table);
  out << "crash candidates: " << t.candidates << " (excluded " << t.excluded
      << ", not replayed " << t.skipped << ", confirmed " << confirmed << " of "
      << t.reports.size() << ")\n";
  out << "unique crash causes: " << t.causes.size() << "\n";
  if (!t.causes.empty()) out << table;
}

TriageSettings SettingsFrom(int replay_runs, double replay_timeout_s,
                            const std::set<std::string>& exclude,
                            const std::string& dedupe_key, bool keep_oom,
                            size_t max_replays_per_key) {
  TriageSettings s;
  s.confirm.replay_runs = replay_runs;
  s.confirm.replay_timeout = Seconds(replay_timeout_s, "replay timeout");
  s.exclusions.excluded_callees = exclude;
  s.exclusions.drop_oom_kills = !keep_oom;
  s.key = ParseDedupeKey(dedupe_key);
  s.max_replays_per_key = max_replays_per_key;
  return s;
}

json PhasesToJson(const std::vector<PhaseRecord>& phases) {
  json out = json::array();
  for (const auto& p : phases) {
    out.push_back({{"model", std::string(ExecutionModelName(p.model))},
                   {"seed", p.seed},
                   {"budget_ms", p.budget.count()},
                   {"elapsed_ms", p.elapsed.count()},
                   {"crashed", p.crashed},
                   {"termination", p.termination},
                   {"exit_code", p.exit_code ? json(*p.exit_code) : json(nullptr)}});
  }
  return out;
}

}  // namespace

int CmdGen(const RunConfig& config, std::ostream& out) {
  TargetManifest manifest = ResolveManifest(config.manifest);
  ModeRequest mode = ParseModeRequest(config.mode);
  SearchConfig search;
  search.budget = Seconds(config.budget_s, "budget");
  search.per_test_timeout = Seconds(config.per_test_timeout_s, "per-test timeout");
  search.seed = config.seed;
  search.max_len = config.max_len;
  search.injection.rate = config.inject_rate;
  search.injection.signal_number = config.inject_signal;
  if (config.inject_rate > 0 && !IsSupportedFaultSignal(config.inject_signal)) {
    throw UnsupportedSignal("cannot inject signal " +
                            std::to_string(config.inject_signal));
  }
  TriageSettings triage =
      SettingsFrom(config.replay_runs, config.replay_timeout_s, config.exclude,
                   config.dedupe_key, config.keep_oom,
                   config.max_replays_per_key);
  if (config.out_dir.empty()) throw ValidationError("an output directory is required");
  MakeDirs(config.out_dir / "suite");
  MakeDirs(config.out_dir / "crashes");

  SupervisorOptions sup;
  sup.worker_path = config.worker_path;
  SupervisedOutcome run =
      RunSupervised(mode, manifest, search, config.whitelist, sup);

  out << "target " << manifest.target_id << ", mode " << ModeRequestName(mode)
      << " (started " << ExecutionModelName(run.policy.resolved_initial)
      << (run.policy.restarted ? ", restarted in subprocess" : "") << ")\n";
  for (const auto& p : run.phases) {
    if (p.crashed) {
      out << "search worker (" << ExecutionModelName(p.model) << ") "
          << p.termination << " after " << p.elapsed.count() << " ms\n";
    }
  }

  json summary = {{"target_id", manifest.target_id},
                  {"mode", std::string(ModeRequestName(mode))},
                  {"resolved_initial",
                   std::string(ExecutionModelName(run.policy.resolved_initial))},
                  {"restarted", run.policy.restarted},
                  {"budget_ms", run.policy.budget_total.count()},
                  {"consumed_before_restart_ms",
                   run.policy.budget_consumed_before_restart.count()},
                  {"phases", PhasesToJson(run.phases)},
                  {"crashed", run.crashed},
                  {"budget_exhausted", run.budget_exhausted},
                  {"coverage", run.FinalCoverage()}};

  if (!run.search) {
    out << "search terminated abnormally; coverage 0%\n";
    WriteFile(config.out_dir / "run.json", summary.dump(2) + "\n");
    return 0;
  }
  const SearchOutcome& outcome = *run.search;
  WriteFile(config.out_dir / "outcome.json",
            SearchOutcomeToJson(outcome).dump() + "\n");
  WriteFile(config.out_dir / "timeline.csv", TimelineCsv(outcome.timeline));

  SubprocessOptions sub;
  sub.worker_path = config.worker_path;
  SubprocessExecutor executor(manifest, sub);
  for (size_t i = 0; i < outcome.final_suite.size(); ++i) {
    const TestCase& tc = outcome.final_suite[i];
    ExecutionRequest request;
    request.testcase = &tc;
    request.timeout = search.per_test_timeout;
    ExecutionResult r = executor.Execute(request, nullptr);
    WriteFile(config.out_dir / "suite" / NumberedName(i),
              SerializeReproducer(MakeReproducer(manifest, tc, r)));
  }

  char cov[32];
  std::snprintf(cov, sizeof cov, "%.1f%%", 100.0 * outcome.Coverage());
  out << "executions: " << outcome.executions << ", coverage " << cov << " ("
      << outcome.covered << "/" << outcome.total << "), suite "
      << outcome.final_suite.size() << " tests\n";

  TriageOutput t = Triage(outcome.crash_queue, executor, triage);
  WriteTriageArtifacts(manifest, t, config.out_dir, out);
  summary["executions"] = outcome.executions;
  summary["suite_size"] = outcome.final_suite.size();
  summary["crash_candidates"] = outcome.crash_queue.size();
  summary["unique_causes"] = t.causes.size();
  WriteFile(config.out_dir / "run.json", summary.dump(2) + "\n");
  return 0;
}

int CmdReplay(const ReplayConfig& config, std::ostream& out) {
  Reproducer r = ParseReproducer(ReadFile(config.reproducer));
  TargetManifest manifest = ResolveManifest(config.manifest);
  CheckReproducerTarget(r, manifest);
  SubprocessOptions sub;
  sub.worker_path = config.worker_path;
  SubprocessExecutor executor(manifest, sub);
  ReplayVerdict v =
      ReplayReproducer(r, executor, Seconds(config.timeout_s, "timeout"));
  out << v.summary << "\n";
  return v.reproduced ? 0 : 1;
}

int CmdTriage(const TriageConfig& config, std::ostream& out) {
  TargetManifest manifest = ResolveManifest(config.manifest);
  json doc;
  try {
    doc = json::parse(ReadFile(config.outcome));
  } catch (const json::parse_error& e) {
    throw DecodeError(std::string("search outcome: ") + e.what());
  }
  SearchOutcome outcome = SearchOutcomeFromJson(doc);
  TriageSettings s =
      SettingsFrom(config.replay_runs, config.replay_timeout_s, config.exclude,
                   config.dedupe_key, config.keep_oom,
                   config.max_replays_per_key);
  if (config.out_dir.empty()) throw ValidationError("an output directory is required");
  SubprocessOptions sub;
  sub.worker_path = config.worker_path;
  SubprocessExecutor executor(manifest, sub);
  TriageOutput t = Triage(outcome.crash_queue, executor, s);
  WriteTriageArtifacts(manifest, t, config.out_dir, out);
  return 0;
}

uint64_t BenchSeed(uint64_t base, const std::string& module,
                   const std::string& mode, int rep) {
  return base ^ Fnv1a(module + "\x1f" + mode + "\x1f" + std::to_string(rep));
}

int CmdBench(const BenchConfig& config, std::ostream& out) {
  if (config.manifests.empty()) throw ValidationError("bench needs a manifest");
  if (config.modes.size() < 2) throw ValidationError("bench needs two modes");
  if (config.repetitions < 1) throw ValidationError("repetitions must be positive");
  std::vector<ModeRequest> modes;
  for (const auto& m : config.modes) modes.push_back(ParseModeRequest(m));
  std::vector<TargetManifest> manifests;
  for (const auto& p : config.manifests) manifests.push_back(ResolveManifest(p));
  if (config.out_dir.empty()) throw ValidationError("an output directory is required");
  MakeDirs(config.out_dir / "timelines");

  SearchConfig search;
  search.budget = Seconds(config.budget_s, "budget");
  search.per_test_timeout = Seconds(config.per_test_timeout_s, "per-test timeout");
  search.max_len = config.max_len;
  SupervisorOptions sup;
  sup.worker_path = config.worker_path;

  std::vector<RunSample> samples;
  for (const auto& manifest : manifests) {
    for (ModeRequest mode : modes) {
      std::string mode_name(ModeRequestName(mode));
      for (int rep = 0; rep < config.repetitions; ++rep) {
        RunSample s;
        s.module = manifest.target_id;
        s.mode = mode_name;
        s.rep = rep;
        search.seed = BenchSeed(config.seed, s.module, mode_name, rep);
        try {
          SupervisedOutcome run =
              RunSupervised(mode, manifest, search, config.whitelist, sup);
          s.crashed = run.crashed;
          s.coverage = run.FinalCoverage();
          if (run.search && !run.crashed) {
            WriteFile(config.out_dir / "timelines" /
                          (s.module + "-" + mode_name + "-" +
                           std::to_string(rep) + ".csv"),
                      TimelineCsv(run.search->timeline));
          }
        } catch (const Error& e) {
          out << s.module << " " << mode_name << " rep " << rep
              << " failed: " << e.what() << "\n";
          s.crashed = true;
          s.coverage = 0;
        }
        out << s.module << " " << mode_name << " rep " << rep << ": "
            << (s.crashed ? "crashed" : "ok") << ", coverage " << s.coverage
            << "\n";
        samples.push_back(std::move(s));
      }
    }
  }
  WriteFile(config.out_dir / "runs.csv", RunSamplesToCsv(samples));
  std::string treatment(ModeRequestName(modes[0]));
  std::string control(ModeRequestName(modes[1]));
  ModeSummary cov = SummarizeModes(samples, treatment, control, "coverage");
  ModeSummary crash = SummarizeModes(samples, treatment, control, "crashes");
  WriteFile(config.out_dir / "stats.json",
            json{{"coverage", ModeSummaryToJson(cov)},
                 {"crashes", ModeSummaryToJson(crash)}}
                    .dump(2) +
                "\n");
  out << RenderModeSummary(cov) << RenderModeSummary(crash);
  return 0;
}

int CmdStats(const StatsConfig& config, std::ostream& out) {
  std::vector<RunSample> samples = ParseRunSamples(ReadFile(config.input));
  std::string treatment = config.treatment, control = config.control;
  std::vector<std::string> modes;
  for (const auto& s : samples) {
    if (std::find(modes.begin(), modes.end(), s.mode) == modes.end()) {
      modes.push_back(s.mode);
    }
  }
  auto pick = [&](std::string& slot, const std::string& other) {
    if (!slot.empty()) return;
    for (const auto& m : modes) {
      if (m != other) {
        slot = m;
        return;
      }
    }
  };
  pick(treatment, control);
  pick(control, treatment);
  if (treatment.empty() || control.empty() || treatment == control) {
    throw MissingPair("stats needs runs under two different modes");
  }
  ModeSummary s =
      SummarizeModes(samples, treatment, control, config.metric, config.alpha);
  out << RenderModeSummary(s);
  if (!config.json_out.empty()) {
    WriteFile(config.json_out, ModeSummaryToJson(s).dump(2) + "\n");
  }
  return 0;
}

}  // namespace isoharness
