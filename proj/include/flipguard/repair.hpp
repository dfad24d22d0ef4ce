#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "flipguard/dtree.hpp"
#include "flipguard/features.hpp"
#include "flipguard/search.hpp"
#include "flipguard/synth.hpp"

namespace flipguard {

struct RepairConfig {
  std::string defect = "program";
  std::vector<Pattern> patterns{kAllPatterns.begin(), kAllPatterns.end()};
  RankMethod fl = RankMethod::All;
  std::size_t topk = 0;
  std::size_t max_candidates = 20;
  TreeParams tree;
  std::int64_t step_budget = kDefaultStepBudget;
  bool simplify = false;
  bool timings = true;  // false writes zero timings for byte-stable reports
};

enum ExitCode { kPlausible = 0, kConfigError = 1, kNonePlausible = 2, kEmptyQueue = 3 };

struct ClassifierOutcome {
  int site = -1;
  Pattern pattern = Pattern::All;
  std::size_t queue_index = 0;
  std::optional<DecisionTree> tree;  // empty when no training data could be collected
  bool plausible = false;
  double training_accuracy = 0;
  std::string error;
};

struct PatchOutcome {
  int site = -1;
  Pattern pattern = Pattern::All;
  std::size_t queue_index = 0;
  DecisionTree tree;
  Patch patch;
  Fidelity fidelity;
  ValidationResult validation;
  Verdict verdict = Verdict::Infeasible;
  std::string diff;
};

struct RepairResult {
  int exit_code = kEmptyQueue;
  std::vector<std::string> warnings;
  std::size_t failing = 0;
  std::vector<CandidateFix> queue;
  std::vector<ClassifierOutcome> classifiers;
  std::vector<PatchOutcome> patches;  // best first
  double search_ms = 0, train_ms = 0, validate_ms = 0;

  const PatchOutcome* top_patch() const {
    for (const auto& p : patches)
      if (p.verdict != Verdict::Infeasible) return &p;
    return nullptr;
  }
  bool fully_fixed_by_search() const { return !queue.empty() && queue.front().priority() == failing; }
};

namespace detail {

class Stopwatch {
 public:
  double lap_ms() {
    auto now = std::chrono::steady_clock::now();
    double ms = std::chrono::duration<double, std::milli>(now - start_).count();
    start_ = now;
    return ms;
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace detail

// Search, then for each candidate in queue order: collect training data,
// train, check plausibility, and for plausible trees synthesize and validate
// a patch. Patches are ranked by tree size, then queue order.
inline RepairResult repair(const Program& p, const TestSuite& train, const TestSuite* validation,
                           const RepairConfig& cfg) {
  RepairResult res;
  detail::Stopwatch clock;
  Baseline base = baseline_runs(p, train, cfg.step_budget);
  std::vector<std::size_t> failing;
  for (std::size_t i = 0; i < train.tests.size(); ++i)
    if (!base.passed(i)) failing.push_back(i);
  res.failing = failing.size();
  if (failing.size() == train.tests.size()) res.warnings.push_back("training suite has no passing test");
  if (failing.empty()) {
    res.warnings.push_back("training suite has no failing test; nothing to repair");
    res.exit_code = kEmptyQueue;
    return res;
  }

  std::vector<int> sites = rank_sites(coverage_matrix(p, base), cfg.fl, cfg.topk);
  res.queue = heuristic_cfa_search(p, sites, train, failing, base, cfg.patterns, cfg.step_budget);
  res.search_ms = clock.lap_ms();
  if (res.queue.empty()) {
    res.exit_code = kEmptyQueue;
    return res;
  }

  std::vector<std::string> seen_sources;
  for (std::size_t qi = 0; qi < res.queue.size() && qi < cfg.max_candidates; ++qi) {
    const CandidateFix& cand = res.queue[qi];
    ClassifierOutcome co;
    co.site = cand.site_id;
    co.pattern = cand.pattern;
    co.queue_index = qi;
    try {
      TrainingSet ts = collect_training_data(p, cand, train, base, cfg.step_budget);
      co.tree = flipguard::train(ts, cfg.tree);
      co.training_accuracy = training_accuracy(*co.tree, ts);
    } catch (const TrainingError& e) {
      co.error = e.what();
    }
    res.train_ms += clock.lap_ms();
    if (co.tree) co.plausible = is_plausible(p, cand.site_id, *co.tree, train, cfg.step_budget).plausible;
    res.validate_ms += clock.lap_ms();

    if (co.plausible) {
      DNF dnf = tree_to_dnf(*co.tree);
      if (cfg.simplify) dnf = simplify(dnf);
      PatchOutcome po;
      po.site = cand.site_id;
      po.pattern = cand.pattern;
      po.queue_index = qi;
      po.tree = *co.tree;
      try {
        po.patch = synthesize_patch(p, cand.site_id, dnf, co.tree->schema);
      } catch (const SynthesisError& e) {
        res.warnings.push_back("candidate " + std::to_string(qi) + ": " + e.what());
        res.classifiers.push_back(std::move(co));
        continue;
      }
      bool duplicate = std::find(seen_sources.begin(), seen_sources.end(), po.patch.source) != seen_sources.end();
      if (!duplicate) {
        seen_sources.push_back(po.patch.source);
        po.fidelity = validate_patch(p, po.patch, po.tree, train, cfg.step_budget);
        if (validation) po.validation = evaluate_on_validation(po.patch, *validation, cfg.step_budget);
        else po.validation.empty = true;
        po.verdict = patch_verdict(po.fidelity.all_pass, po.fidelity.fidelity, po.validation);
        po.diff = patch_diff(p, po.patch, cfg.defect + ".mimp");
        res.patches.push_back(std::move(po));
      }
      res.validate_ms += clock.lap_ms();
    }
    res.classifiers.push_back(std::move(co));
  }

  std::stable_sort(res.patches.begin(), res.patches.end(), [](const PatchOutcome& a, const PatchOutcome& b) {
    bool fa = a.verdict != Verdict::Infeasible, fb = b.verdict != Verdict::Infeasible;
    if (fa != fb) return fa;
    if (a.tree.leaf_count() != b.tree.leaf_count()) return a.tree.leaf_count() < b.tree.leaf_count();
    if (a.tree.node_count() != b.tree.node_count()) return a.tree.node_count() < b.tree.node_count();
    return a.queue_index < b.queue_index;
  });
  if (!validation && !res.patches.empty())
    res.warnings.push_back("no validation suite: verdicts are vacuous");
  else if (validation && validation->tests.empty())
    res.warnings.push_back("validation suite is empty: verdicts are vacuous");

  bool any_plausible = std::any_of(res.classifiers.begin(), res.classifiers.end(),
                                   [](const ClassifierOutcome& c) { return c.plausible; });
  res.exit_code = any_plausible ? kPlausible : kNonePlausible;
  return res;
}

inline nlohmann::ordered_json report_json(const Program& p, const RepairResult& r, const RepairConfig& cfg) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["defect"] = cfg.defect;
  j["sites"] = ordered_json::array();
  for (const auto& s : p.sites)
    j["sites"].push_back({{"id", s.id}, {"function", s.function}, {"line", s.loc.line}, {"clause", s.clause}});
  j["candidates"] = ordered_json::array();
  for (const auto& c : r.queue)
    j["candidates"].push_back({{"site", c.site_id},
                               {"pattern", pattern_name(c.pattern)},
                               {"fixed_tests", c.fixed_tests},
                               {"priority", c.priority()}});
  j["classifiers"] = ordered_json::array();
  for (const auto& c : r.classifiers) {
    ordered_json e = {{"site", c.site}, {"pattern", pattern_name(c.pattern)}};
    e["tree"] = c.tree ? ordered_json(format_tree(*c.tree)) : ordered_json(nullptr);
    e["plausible"] = c.plausible;
    e["training_accuracy"] = c.training_accuracy;
    if (!c.error.empty()) e["error"] = c.error;
    j["classifiers"].push_back(std::move(e));
  }
  j["patches"] = ordered_json::array();
  for (const auto& po : r.patches) {
    j["patches"].push_back({{"site", po.site},
                            {"pattern", pattern_name(po.pattern)},
                            {"guard_expr", po.patch.guard_expr},
                            {"diff", po.diff},
                            {"fidelity", po.fidelity.fidelity},
                            {"validation", {{"pass", po.validation.pass}, {"fail", po.validation.fail}}},
                            {"verdict", to_string(po.verdict)}});
  }
  auto ms = [&](double v) { return cfg.timings ? v : 0.0; };
  j["timings"] = {{"search_ms", ms(r.search_ms)}, {"train_ms", ms(r.train_ms)}, {"validate_ms", ms(r.validate_ms)}};
  j["exit_code"] = r.exit_code;
  j["warnings"] = r.warnings;
  return j;
}

}  // namespace flipguard
