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

#include "isoharness/stats.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

#include "isoharness/error.h"

namespace isoharness {

namespace {

// Slack for comparing rank-sum deviations that are sums of halves.
constexpr double kEps = 1e-9;

void RequireNonEmpty(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw DegenerateSample("empty sample");
}

// Two-sided exact p: the share of all ways to draw |a| ranks from the pooled
// midranks whose sum deviates from its mean at least as much as observed.
double ExactP(const std::vector<double>& ranks, size_t n1, double r1) {
  const size_t n = ranks.size();
  const double mean = static_cast<double>(n1) * (n + 1) / 2.0;
  const double observed = std::fabs(r1 - mean);
  uint64_t hits = 0, total = 0;
  for (uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<size_t>(__builtin_popcount(mask)) != n1) continue;
    double sum = 0.0;
    for (size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) sum += ranks[i];
    }
    ++total;
    if (std::fabs(sum - mean) >= observed - kEps) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(total);
}

double NormalP(const std::vector<double>& pooled, size_t n1, size_t n2,
               double u) {
  const double n = static_cast<double>(n1 + n2);
  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  double ties = 0.0;
  for (size_t i = 0; i < sorted.size();) {
    size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    double t = static_cast<double>(j - i);
    ties += t * t * t - t;
    i = j;
  }
  double var = static_cast<double>(n1) * static_cast<double>(n2) / 12.0 *
               ((n + 1.0) - ties / (n * (n - 1.0)));
  if (var <= 0.0) return 1.0;
  double mu = static_cast<double>(n1) * static_cast<double>(n2) / 2.0;
  double z = std::max(0.0, std::fabs(u - mu) - 0.5) / std::sqrt(var);
  return std::min(1.0, std::erfc(z / std::sqrt(2.0)));
}

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double Goodness(const RunSample& s, const std::string& metric) {
  if (metric == "coverage") return s.crashed ? 0.0 : s.coverage;
  return s.crashed ? 0.0 : 1.0;
}

}  // namespace

std::vector<double> Midranks(std::span<const double> values) {
  std::vector<size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t x, size_t y) { return values[x] < values[y]; });
  std::vector<double> ranks(values.size());
  for (size_t i = 0; i < order.size();) {
    size_t j = i;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    // Positions i..j-1 share the average of ranks i+1..j.
    double rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

MannWhitneyResult MannWhitneyU(std::span<const double> a,
                               std::span<const double> b) {
  RequireNonEmpty(a, b);
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::vector<double> ranks = Midranks(pooled);
  const size_t n1 = a.size(), n2 = b.size();
  double r1 = std::accumulate(ranks.begin(), ranks.begin() + n1, 0.0);

  MannWhitneyResult res;
  res.u = r1 - static_cast<double>(n1) * (n1 + 1) / 2.0;
  if (n1 + n2 <= kExactMannWhitneyLimit) {
    res.exact = true;
    res.p = ExactP(ranks, n1, r1);
  } else {
    res.p = NormalP(pooled, n1, n2, res.u);
  }
  return res;
}

double VarghaDelaneyA12(std::span<const double> treatment,
                        std::span<const double> control) {
  RequireNonEmpty(treatment, control);
  // U of the treatment sample from midranks; halves are exact in binary, so
  // the only rounding is the final division.
  std::vector<double> pooled(treatment.begin(), treatment.end());
  pooled.insert(pooled.end(), control.begin(), control.end());
  std::vector<double> ranks = Midranks(pooled);
  const double m = static_cast<double>(treatment.size());
  const double n = static_cast<double>(control.size());
  double rt = std::accumulate(ranks.begin(), ranks.begin() + treatment.size(), 0.0);
  return (rt - m * (m + 1.0) / 2.0) / (m * n);
}

std::vector<RunSample> ParseRunSamples(std::string_view csv) {
  std::istringstream is{std::string(csv)};
  std::string line;
  if (!std::getline(is, line)) throw ParseError("run samples: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "module,mode,rep,coverage,crashed") {
    throw ParseError("run samples: unexpected header '" + line + "'");
  }
  std::vector<RunSample> out;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = SplitCsvLine(line);
    auto fail = [&](const std::string& why) {
      throw ParseError("run samples line " + std::to_string(lineno) + ": " + why);
    };
    if (fields.size() != 5) fail("expected 5 fields");
    RunSample s;
    s.module = fields[0];
    s.mode = fields[1];
    try {
      size_t pos = 0;
      s.rep = std::stoi(fields[2], &pos);
      if (pos != fields[2].size()) fail("bad rep");
      s.coverage = std::stod(fields[3], &pos);
      if (pos != fields[3].size()) fail("bad coverage");
    } catch (const std::logic_error&) {
      fail("bad number");
    }
    if (!(s.coverage >= 0.0 && s.coverage <= 1.0)) fail("coverage outside [0,1]");
    if (fields[4] == "1" || fields[4] == "true") {
      s.crashed = true;
    } else if (fields[4] != "0" && fields[4] != "false") {
      fail("bad crashed flag");
    }
    if (s.module.empty() || s.mode.empty()) fail("empty module or mode");
    out.push_back(std::move(s));
  }
  return out;
}

std::string RunSamplesToCsv(std::span<const RunSample> samples) {
  std::ostringstream os;
  os << "module,mode,rep,coverage,crashed\n";
  char buf[64];
  for (const auto& s : samples) {
    std::snprintf(buf, sizeof buf, "%.17g", s.coverage);
    os << s.module << "," << s.mode << "," << s.rep << "," << buf << ","
       << (s.crashed ? 1 : 0) << "\n";
  }
  return os.str();
}

std::string_view VerdictName(Verdict v) {
  switch (v) {
    case Verdict::kBetterSignificant: return "better (sig)";
    case Verdict::kBetter: return "better";
    case Verdict::kEqual: return "equal";
    case Verdict::kWorse: return "worse";
    case Verdict::kWorseSignificant: return "worse (sig)";
  }
  return "?";
}

ModeSummary SummarizeModes(std::span<const RunSample> samples,
                           const std::string& treatment,
                           const std::string& control,
                           const std::string& metric, double alpha) {
  if (metric != "coverage" && metric != "crashes") {
    throw ValidationError("unknown metric '" + metric + "'");
  }
  ModeSummary s;
  s.treatment = treatment;
  s.control = control;
  s.metric = metric;
  s.alpha = alpha;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>>
      by_module;
  for (const auto& r : samples) {
    if (r.mode == treatment) by_module[r.module].first.push_back(Goodness(r, metric));
    if (r.mode == control) by_module[r.module].second.push_back(Goodness(r, metric));
  }
  if (by_module.empty()) {
    throw MissingPair("no runs for " + treatment + " or " + control);
  }
  double a12_sum = 0.0;
  for (const auto& [module, pair] : by_module) {
    const auto& [t, c] = pair;
    if (t.empty() || c.empty()) {
      throw MissingPair("module " + module + " lacks runs under " +
                        (t.empty() ? treatment : control));
    }
    ModuleComparison mc;
    mc.module = module;
    mc.n_treatment = t.size();
    mc.n_control = c.size();
    mc.a12 = VarghaDelaneyA12(t, c);
    mc.p = MannWhitneyU(t, c).p;
    bool sig = mc.p < alpha;
    if (mc.a12 > 0.5) {
      mc.verdict = sig ? Verdict::kBetterSignificant : Verdict::kBetter;
    } else if (mc.a12 < 0.5) {
      mc.verdict = sig ? Verdict::kWorseSignificant : Verdict::kWorse;
    } else {
      mc.verdict = Verdict::kEqual;
    }
    ++s.totals[mc.verdict];
    a12_sum += mc.a12;
    s.modules.push_back(std::move(mc));
  }
  s.mean_a12 = a12_sum / static_cast<double>(s.modules.size());
  return s;
}

nlohmann::json ModeSummaryToJson(const ModeSummary& s) {
  nlohmann::json modules = nlohmann::json::array();
  for (const auto& m : s.modules) {
    modules.push_back({{"module", m.module},
                       {"n_treatment", m.n_treatment},
                       {"n_control", m.n_control},
                       {"a12", m.a12},
                       {"p", m.p},
                       {"verdict", std::string(VerdictName(m.verdict))}});
  }
  nlohmann::json totals = nlohmann::json::object();
  for (Verdict v : {Verdict::kBetterSignificant, Verdict::kBetter,
                    Verdict::kEqual, Verdict::kWorse,
                    Verdict::kWorseSignificant}) {
    auto it = s.totals.find(v);
    totals[std::string(VerdictName(v))] = it == s.totals.end() ? 0 : it->second;
  }
  return {{"treatment", s.treatment}, {"control", s.control},
          {"metric", s.metric},       {"alpha", s.alpha},
          {"modules", modules},       {"totals", totals},
          {"mean_a12", s.mean_a12}};
}

std::string RenderModeSummary(const ModeSummary& s) {
  std::ostringstream os;
  char line[200];
  os << s.treatment << " vs " << s.control << " on " << s.metric
     << " (alpha " << s.alpha << ")\n";
  std::snprintf(line, sizeof line, "%-24s %5s %5s %8s %10s  %s\n", "Module",
                "n_t", "n_c", "A12", "p", "Verdict");
  os << line;
  for (const auto& m : s.modules) {
    std::snprintf(line, sizeof line, "%-24s %5zu %5zu %8.3f %10.4g  %s\n",
                  m.module.c_str(), m.n_treatment, m.n_control, m.a12, m.p,
                  std::string(VerdictName(m.verdict)).c_str());
    os << line;
  }
  auto count = [&](Verdict v) {
    auto it = s.totals.find(v);
    return it == s.totals.end() ? size_t{0} : it->second;
  };
  std::snprintf(line, sizeof line,
                "Totals: %zu better (sig), %zu better, %zu equal, %zu worse, "
                "%zu worse (sig); mean A12 %.3f\n",
                count(Verdict::kBetterSignificant), count(Verdict::kBetter),
                count(Verdict::kEqual), count(Verdict::kWorse),
                count(Verdict::kWorseSignificant), s.mean_a12);
  os << line;
  return os.str();
}

}  // namespace isoharness
