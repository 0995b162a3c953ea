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

#include "isoharness/triage.h"

#include <signal.h>

#include <cstdio>
#include <map>
#include <sstream>

#include "isoharness/error.h"
#include "isoharness/json_codec.h"

namespace isoharness {

using nlohmann::json;

namespace {

// Total order used to pick representatives independent of input order.
bool PreferredRepresentative(const CrashReport& a, const CrashReport& b) {
  if (a.testcase.size() != b.testcase.size()) {
    return a.testcase.size() < b.testcase.size();
  }
  if (a.testcase.id != b.testcase.id) return a.testcase.id < b.testcase.id;
  std::string ea = SerializeTestCase(a.testcase);
  std::string eb = SerializeTestCase(b.testcase);
  if (ea.size() != eb.size()) return ea.size() < eb.size();
  if (ea != eb) return ea < eb;
  // Equal tests: any total order keeps the choice independent of input order.
  return CrashReportToJson(a).dump() < CrashReportToJson(b).dump();
}

json OptionalInt(const std::optional<int>& v) {
  return v ? json(*v) : json(nullptr);
}

std::optional<int> OptionalIntFrom(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<int>();
}

}  // namespace

std::string_view FaultClassName(FaultClass c) {
  switch (c) {
    case FaultClass::kAborted: return "Aborted";
    case FaultClass::kSegmentationFault: return "Segmentation fault";
    case FaultClass::kTimeout: return "Timeout";
    case FaultClass::kIllegalInstruction: return "Illegal instruction";
    case FaultClass::kBusError: return "Bus error";
    case FaultClass::kFloatingPointException: return "Floating-point exception";
  }
  return "?";
}

FaultClass Classify(std::optional<int> exit_code, bool timed_out) {
  if (timed_out) return FaultClass::kTimeout;
  if (exit_code) {
    switch (-*exit_code) {
      case SIGSEGV: return FaultClass::kSegmentationFault;
      case SIGABRT: return FaultClass::kAborted;
      case SIGILL: return FaultClass::kIllegalInstruction;
      case SIGBUS: return FaultClass::kBusError;
      case SIGFPE: return FaultClass::kFloatingPointException;
      default: break;
    }
  }
  throw UnknownExitCode("no fault class for exit code " +
                        (exit_code ? std::to_string(*exit_code) : "none"));
}

std::string SignalName(std::optional<int> exit_code) {
  if (!exit_code || *exit_code >= 0) return "";
  const char* abbrev = sigabbrev_np(-*exit_code);
  return abbrev ? std::string("SIG") + abbrev
                : "signal " + std::to_string(-*exit_code);
}

CrashReport ReportFromCandidate(const TestCase& tc, const ExecutionResult& r) {
  CrashReport report;
  report.testcase = tc;
  report.exit_code = r.timed_out() ? std::nullopt : r.exit_code;
  report.signal_name = SignalName(report.exit_code);
  report.locator = r.last_statement;
  return report;
}

std::vector<CrashReport> Confirm(std::span<const CrashCandidate> candidates,
                                 Executor& executor,
                                 const ConfirmOptions& options) {
  if (options.replay_runs < 1) {
    throw ValidationError("replay_runs must be at least 1");
  }
  std::vector<CrashReport> out;
  out.reserve(candidates.size());
  for (const CrashCandidate& c : candidates) {
    CrashReport report = ReportFromCandidate(c.testcase, c.result);
    ExecutionRequest request;
    request.testcase = &c.testcase;
    request.timeout = options.replay_timeout;
    report.reproduced = true;
    for (int i = 0; i < options.replay_runs; ++i) {
      ExecutionResult replay = executor.Execute(request, nullptr);
      ++report.replay_runs;
      std::optional<int> code =
          replay.timed_out() ? std::nullopt : replay.exit_code;
      bool fatal = replay.fatal();
      if (!fatal || code != report.exit_code ||
          replay.last_statement != report.locator) {
        report.reproduced = false;
        break;
      }
    }
    out.push_back(std::move(report));
  }
  return out;
}

std::string_view DedupeKeyName(DedupeKey key) {
  return key == DedupeKey::kCallee ? "callee" : "callee+index";
}

DedupeKey ParseDedupeKey(std::string_view name) {
  if (name == "callee") return DedupeKey::kCallee;
  if (name == "callee+index") return DedupeKey::kCalleeAndIndex;
  throw ValidationError("unknown dedupe key '" + std::string(name) + "'");
}

CauseKey KeyOf(const CrashReport& report, DedupeKey key) {
  CauseKey k;
  if (report.locator) {
    k.callee = report.locator->callee_symbol;
    if (key == DedupeKey::kCalleeAndIndex) {
      k.statement_index = report.locator->statement_index;
    }
  }
  k.exit_code = report.exit_code;
  return k;
}

std::vector<CrashCause> Dedupe(std::span<const CrashReport> reports,
                               DedupeKey key) {
  std::map<CauseKey, CrashCause> groups;
  for (const CrashReport& r : reports) {
    if (!r.reproduced) continue;
    CauseKey k = KeyOf(r, key);
    auto [it, inserted] = groups.try_emplace(k);
    CrashCause& cause = it->second;
    if (inserted) {
      cause.key = k;
      cause.representative = r;
      try {
        cause.fault_class = Classify(r.exit_code, r.timed_out());
      } catch (const UnknownExitCode&) {
        cause.fault_class.reset();
      }
    } else if (PreferredRepresentative(r, cause.representative)) {
      cause.representative = r;
    }
    ++cause.member_count;
  }
  std::vector<CrashCause> out;
  out.reserve(groups.size());
  for (auto& [k, cause] : groups) out.push_back(std::move(cause));
  return out;
}

std::vector<CrashReport> FilterExclusions(std::span<const CrashReport> reports,
                                          const ExclusionConfig& config) {
  std::vector<CrashReport> out;
  for (const CrashReport& r : reports) {
    if (r.locator && config.excluded_callees.count(r.locator->callee_symbol)) {
      continue;
    }
    if (config.drop_oom_kills && r.exit_code == -SIGKILL) continue;
    out.push_back(r);
  }
  return out;
}

json CrashReportToJson(const CrashReport& r) {
  return {{"testcase", TestCaseToJson(r.testcase)},
          {"exit_code", OptionalInt(r.exit_code)},
          {"signal", r.signal_name.empty() ? json(nullptr) : json(r.signal_name)},
          {"locator", LocatorToJson(r.locator)},
          {"reproduced", r.reproduced},
          {"replay_runs", r.replay_runs}};
}

CrashReport CrashReportFromJson(const json& j) {
  try {
    CrashReport r;
    r.testcase = TestCaseFromJson(j.at("testcase"));
    r.exit_code = OptionalIntFrom(j.at("exit_code"));
    if (!j.at("signal").is_null()) r.signal_name = j.at("signal").get<std::string>();
    r.locator = LocatorFromJson(j.at("locator"));
    r.reproduced = j.at("reproduced").get<bool>();
    r.replay_runs = j.at("replay_runs").get<int>();
    return r;
  } catch (const json::exception& e) {
    throw DecodeError(std::string("crash report: ") + e.what());
  }
}

json CausesToJson(std::span<const CrashCause> causes) {
  json out = json::array();
  for (const CrashCause& c : causes) {
    json key = {{"callee", c.key.callee},
                {"statement_index", c.key.statement_index
                                        ? json(*c.key.statement_index)
                                        : json(nullptr)},
                {"exit_code", OptionalInt(c.key.exit_code)}};
    out.push_back(
        {{"key", std::move(key)},
         {"fault_class", c.fault_class
                             ? json(std::string(FaultClassName(*c.fault_class)))
                             : json(nullptr)},
         {"member_count", c.member_count},
         {"representative", CrashReportToJson(c.representative)}});
  }
  return out;
}

std::vector<CrashCause> CausesFromJson(const json& j) {
  static const FaultClass kAll[] = {
      FaultClass::kAborted,          FaultClass::kSegmentationFault,
      FaultClass::kTimeout,          FaultClass::kIllegalInstruction,
      FaultClass::kBusError,         FaultClass::kFloatingPointException};
  try {
    std::vector<CrashCause> out;
    for (const json& e : j) {
      CrashCause c;
      const json& key = e.at("key");
      c.key.callee = key.at("callee").get<std::string>();
      if (!key.at("statement_index").is_null()) {
        c.key.statement_index = key.at("statement_index").get<size_t>();
      }
      c.key.exit_code = OptionalIntFrom(key.at("exit_code"));
      if (!e.at("fault_class").is_null()) {
        std::string name = e.at("fault_class").get<std::string>();
        for (FaultClass fc : kAll) {
          if (FaultClassName(fc) == name) c.fault_class = fc;
        }
        if (!c.fault_class) throw DecodeError("unknown fault class " + name);
      }
      c.member_count = e.at("member_count").get<size_t>();
      c.representative = CrashReportFromJson(e.at("representative"));
      out.push_back(std::move(c));
    }
    return out;
  } catch (const json::exception& e) {
    throw DecodeError(std::string("crash causes: ") + e.what());
  }
}

std::vector<FaultRow> FaultDistribution(std::span<const CrashCause> causes) {
  std::map<std::string, FaultRow> rows;
  for (const CrashCause& c : causes) {
    std::string reason =
        c.fault_class ? std::string(FaultClassName(*c.fault_class)) : "Unknown";
    FaultRow& row = rows[reason];
    row.reason = reason;
    row.exit_code = c.key.exit_code ? std::to_string(*c.key.exit_code) : "None";
    std::string sig = SignalName(c.key.exit_code);
    row.signal = sig.empty() ? "N/A" : sig;
    ++row.count;
  }
  std::vector<FaultRow> out;
  for (auto& [name, row] : rows) {
    row.percentage = 100.0 * static_cast<double>(row.count) /
                     static_cast<double>(causes.size());
    out.push_back(std::move(row));
  }
  return out;
}

std::string RenderFaultTable(std::span<const CrashCause> causes) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-26s %9s %8s %6s %11s\n", "Crash reason",
                "Exit code", "Signal", "Count", "Percentage");
  os << line;
  for (const FaultRow& row : FaultDistribution(causes)) {
    std::snprintf(line, sizeof line, "%-26s %9s %8s %6zu %10.2f%%\n",
                  row.reason.c_str(), row.exit_code.c_str(), row.signal.c_str(),
                  row.count, row.percentage);
    os << line;
  }
  return os.str();
}

}  // namespace isoharness
