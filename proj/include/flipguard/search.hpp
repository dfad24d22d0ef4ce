#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "flipguard/interp.hpp"
#include "flipguard/patterns.hpp"
#include "flipguard/test_suite.hpp"

namespace flipguard {

// Unmodified runs of every test: verdicts and per-site execution counts.
struct Baseline {
  std::vector<RunResult> runs;

  bool passed(std::size_t test) const { return runs[test].passed; }
  std::int64_t count(std::size_t test, int site) const {
    return runs[test].site_counts[static_cast<std::size_t>(site)];
  }
};

inline Baseline baseline_runs(const Program& p, const TestSuite& suite, std::int64_t budget = kDefaultStepBudget) {
  Baseline b;
  b.runs.reserve(suite.tests.size());
  for (const auto& t : suite.tests) b.runs.push_back(run(p, t, Controller::none(), budget));
  return b;
}

struct CoverageMatrix {
  std::vector<std::vector<bool>> executed;  // [site][test]
  std::vector<bool> passed;                 // [test]
};

inline CoverageMatrix coverage_matrix(const Program& p, const Baseline& b) {
  CoverageMatrix m;
  m.executed.assign(p.sites.size(), std::vector<bool>(b.runs.size(), false));
  for (std::size_t t = 0; t < b.runs.size(); ++t) {
    m.passed.push_back(b.runs[t].passed);
    for (std::size_t s = 0; s < p.sites.size(); ++s) m.executed[s][t] = b.runs[t].site_counts[s] > 0;
  }
  return m;
}

enum class RankMethod { All, Ochiai };

// ef / sqrt((ef + nf) * (ef + ep)); zero denominator scores 0.
inline double ochiai_score(const CoverageMatrix& m, std::size_t site) {
  double ef = 0, ep = 0, nf = 0;
  for (std::size_t t = 0; t < m.passed.size(); ++t) {
    bool hit = m.executed[site][t];
    if (m.passed[t]) ep += hit;
    else if (hit) ef += 1;
    else nf += 1;
  }
  double denom = std::sqrt((ef + nf) * (ef + ep));
  return denom == 0 ? 0.0 : ef / denom;
}

// `topk` = 0 keeps every ranked site.
inline std::vector<int> rank_sites(const CoverageMatrix& m, RankMethod method, std::size_t topk = 0) {
  std::vector<int> order;
  if (method == RankMethod::All) {
    for (std::size_t s = 0; s < m.executed.size(); ++s) order.push_back(static_cast<int>(s));
  } else {
    if (std::find(m.passed.begin(), m.passed.end(), false) == m.passed.end()) return {};
    std::vector<double> score;
    for (std::size_t s = 0; s < m.executed.size(); ++s) {
      score.push_back(ochiai_score(m, s));
      order.push_back(static_cast<int>(s));
    }
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return score[static_cast<std::size_t>(a)] > score[static_cast<std::size_t>(b)];
    });
  }
  if (topk > 0 && order.size() > topk) order.resize(topk);
  return order;
}

struct CandidateFix {
  int site_id = -1;
  Pattern pattern = Pattern::All;
  std::vector<std::string> fixed_tests;  // suite order
  std::size_t priority() const { return fixed_tests.size(); }
};

// Priority descending, then site id, then canonical pattern order.
inline bool queue_before(const CandidateFix& a, const CandidateFix& b) {
  if (a.priority() != b.priority()) return a.priority() > b.priority();
  if (a.site_id != b.site_id) return a.site_id < b.site_id;
  return pattern_rank(a.pattern) < pattern_rank(b.pattern);
}

struct SearchStats {
  std::size_t runs = 0;
};

// Tries every (site, failing test, pattern) and keeps the (site, pattern)
// pairs that make at least one failing test pass. `failing` indexes into
// `suite`; each test's unmodified run supplies the per-site counts.
inline std::vector<CandidateFix> heuristic_cfa_search(const Program& p, const std::vector<int>& sites,
                                                      const TestSuite& suite, const std::vector<std::size_t>& failing,
                                                      const Baseline& base,
                                                      const std::vector<Pattern>& patterns = {kAllPatterns.begin(),
                                                                                              kAllPatterns.end()},
                                                      std::int64_t budget = kDefaultStepBudget,
                                                      SearchStats* stats = nullptr) {
  std::vector<CandidateFix> queue;
  for (int site : sites) {
    std::vector<CandidateFix> per_pattern;
    for (Pattern pat : kAllPatterns) {
      if (std::find(patterns.begin(), patterns.end(), pat) == patterns.end()) continue;
      per_pattern.push_back({site, pat, {}});
    }
    for (std::size_t t : failing) {
      std::int64_t n = base.count(t, site);
      if (n == 0) continue;  // every plan reproduces the failing baseline
      for (auto& cand : per_pattern) {
        InstanceSet plan = negation_plan(cand.pattern, n);
        if (plan.rule == InstanceSet::Rule::Explicit && plan.indices.empty()) continue;
        if (stats) ++stats->runs;
        if (run(p, suite.tests[t], Controller::pattern(site, plan), budget).passed)
          cand.fixed_tests.push_back(suite.tests[t].name);
      }
    }
    for (auto& cand : per_pattern)
      if (!cand.fixed_tests.empty()) queue.push_back(std::move(cand));
  }
  std::stable_sort(queue.begin(), queue.end(), queue_before);
  return queue;
}

}  // namespace flipguard
