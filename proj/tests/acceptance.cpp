// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>

#include "micro.hpp"

using namespace flipguard;
using namespace fg_test;

namespace {

using Clock = std::chrono::steady_clock;

struct Check {
  std::ostringstream why;
  bool ok = true;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) why << what;
    ok = ok && cond;
  }
};

std::vector<std::size_t> failing_of(const Baseline& b) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < b.runs.size(); ++i)
    if (!b.passed(i)) out.push_back(i);
  return out;
}

struct Repaired {
  LoadedDefect d;
  TestSuite validation;
  RepairResult result;
};

Repaired repair_defect(const std::string& name, std::size_t validation_n = 1000) {
  Repaired r{load_defect(name), {}, {}};
  r.validation = validation_for(r.d, validation_n);
  RepairConfig cfg;
  cfg.defect = name;
  r.result = repair(r.d.buggy, r.d.train, &r.validation, cfg);
  return r;
}

// Evaluates a condition over `ch` as the first character of a one-letter
// word, the state the syllables site sees on its first execution.
bool condition_at(const std::string& condition, char32_t c) {
  Program p = lowered(
      "void main(string word) {\n"
      "  int count = 0;\n"
      "  int i = 0;\n"
      "  char ch = word[i];\n"
      "  if (" + condition + ") { print(\"T\"); } else { print(\"F\"); }\n"
      "}");
  TestCase t = test_case("t", {Value(std::u32string(1, c))});
  return run(p, t).output == "T\n";
}

void criterion1(Check& c) {
  Repaired r = repair_defect("syllables_v1");
  const PatchOutcome* top = r.result.top_patch();
  c.require(top != nullptr, "no plausible patch");
  if (!top) return;
  c.require(r.d.buggy.sites[static_cast<std::size_t>(top->site)].clause == "ch == 'y'", "top patch not at ch == 'y'");
  std::set<char32_t> chars;
  for (char32_t x = 'a'; x <= 'z'; ++x) chars.insert(x);
  for (const auto& t : r.d.train.tests)
    for (const auto& a : t.args)
      if (a.is_string())
        for (char32_t x : a.as_string()) chars.insert(x);
  for (char32_t x : chars) {
    bool want = x == 'y' || x == 'i';
    c.require(condition_at(top->patch.condition, x) == want,
              "condition '" + top->patch.condition + "' differs at '" + to_utf8(std::u32string(1, x)) + "'");
  }
  c.why << "condition " << top->patch.condition;
}

void criterion2(Check& c) {
  Repaired r = repair_defect("grade_v13");
  int site = site_with_clause(r.d.buggy, "score > a");
  c.require(!r.result.queue.empty() && r.result.queue.front().site_id == site &&
                r.result.queue.front().pattern == Pattern::All,
            "queue head is not (score > a, all)");
  if (r.result.queue.empty()) return;
  TrainingSet ts = collect_training_data(r.d.buggy, r.result.queue.front(), r.d.train);
  Baseline b = baseline_runs(r.d.buggy, r.d.train);
  std::set<std::string> failing;
  for (auto i : failing_of(b)) failing.insert(r.d.train.tests[i].name);
  for (const auto& s : ts.samples)
    c.require(!failing.count(s.test) || s.label == Label::Negate, "keep row from a fixed failing test");
  c.require(ts.count(Label::Negate) > 0, "no negate rows");
  DecisionTree t = train(ts);
  c.require(t.node_count() == 1 && t.root().label == Label::Negate, "tree is not a single negate leaf");
  const PatchOutcome* top = r.result.top_patch();
  c.require(top && top->patch.condition == "!(score > a)", "top patch is not !(score > a)");
  c.require(top && top->validation.pass == 1000 && top->validation.fail == 0, "validation below 100%");
  if (top) c.why << "validation " << top->validation.pass << "/1000";
}

void criterion3(Check& c) {
  Repaired r = repair_defect("tcas_v1");
  int site = site_with_clause(r.d.buggy, "(down_sep > alim(level))");
  bool always = false;
  for (const auto& p : r.result.patches)
    if (p.site == site && p.pattern == Pattern::All && p.patch.dnf.is_true() && p.fidelity.all_pass) {
      always = true;
      c.require(p.validation.fail >= 1, "always-negate patch passes every validation test");
      c.why << "always-negate fails " << p.validation.fail << "/1000; ";
    }
  c.require(always, "no plausible always-negate patch");
  Defect def = r.d.defect;
  DefectRow row = bench_defect(def, BenchConfig{});
  c.require(row.plausible && row.verdict == "overfit", "bench verdict is " + row.verdict);
  c.why << "bench verdict " << row.verdict;
}

bool literal_bit(Pattern p, std::int64_t i, std::int64_t n) {
  bool first = i == 1, last = i == n;
  switch (p) {
    case Pattern::All: return true;
    case Pattern::First: return first;
    case Pattern::Last: return last;
    case Pattern::AllFirst: return !first;
    case Pattern::AllLast: return !last;
    case Pattern::AllFirstLast: return !first && !last;
    case Pattern::FirstPlus1: return i == 2;
    case Pattern::LastMinus1: return i == n - 1;
    case Pattern::FirstLast: return first || last;
    case Pattern::Odd: return i % 2 == 1;
    case Pattern::Even: return i % 2 == 0;
  }
  return false;
}

void criterion4(Check& c) {
  int cases = 0;
  for (Pattern p : kAllPatterns)
    for (std::int64_t n = 0; n <= 20; ++n) {
      auto s = instances_to_negate(p, n);
      std::string got(static_cast<std::size_t>(n), '0'), want;
      for (auto i : s) {
        c.require(i >= 1 && i <= n, "instance out of range");
        if (i >= 1 && i <= n) got[static_cast<std::size_t>(i - 1)] = '1';
      }
      for (std::int64_t i = 1; i <= n; ++i) want += literal_bit(p, i, n) ? '1' : '0';
      c.require(got == want, std::string(pattern_name(p)) + " n=" + std::to_string(n) + ": " + got + " vs " + want);
      ++cases;
    }
  std::string anchor(7, '0');
  for (auto i : instances_to_negate(Pattern::AllFirstLast, 7)) anchor[static_cast<std::size_t>(i - 1)] = '1';
  c.require(anchor == "0111110", "anchor gives " + anchor);
  c.require(cases == 231, "case count");
  c.why << cases << " cases";
}

void criterion5(Check& c) {
  for (const auto& mc : micro_cases()) {
    Program p = lowered(mc.source);
    TestSuite s = suite_of(mc.suite, p);
    int site = site_with_clause(p, mc.clause);
    Baseline b = baseline_runs(p, s);
    auto failing = failing_of(b);
    c.require(site >= 0 && failing.size() == 1, mc.name + ": malformed case");
    if (site < 0 || failing.size() != 1) continue;
    c.require(b.count(failing[0], site) <= 4, mc.name + ": site runs more than 4 times");
    std::set<Pattern> got;
    for (const auto& cand : heuristic_cfa_search(p, {site}, s, failing, b)) got.insert(cand.pattern);
    std::set<Pattern> want = brute_force_patterns(p, site, s.tests[failing[0]]);
    c.require(got == want, mc.name + ": search and oracle disagree");
    c.require(!want.empty(), mc.name + ": oracle finds no pattern");
  }
  c.why << micro_cases().size() << " micro-programs";
}

void criterion6(Check& c) {
  std::size_t patches = 0;
  for (const auto& def : corpus()) {
    Repaired r = repair_defect(def.name, 50);
    for (const auto& po : r.result.patches) {
      if (!po.fidelity.all_pass) continue;
      ++patches;
      Plausibility guided = is_plausible(r.d.buggy, po.site, po.tree, r.d.train);
      for (std::size_t i = 0; i < r.d.train.tests.size(); ++i) {
        bool patched = run(po.patch.program, r.d.train.tests[i]).passed;
        c.require(patched == guided.runs[i].passed,
                  def.name + " site " + std::to_string(po.site) + " test " + r.d.train.tests[i].name);
      }
      c.require(po.fidelity.fidelity, def.name + ": reported fidelity false");
    }
  }
  c.require(patches > 0, "no plausible patches");
  c.why << patches << " plausible patches";
}

struct Frac {
  std::int64_t num, den;
  bool operator==(const Frac& o) const { return num * o.den == o.num * den; }
  bool operator<(const Frac& o) const { return num * o.den < o.num * den; }
};

void criterion7(Check& c) {
  std::size_t sets = 0, conflict_free = 0;
  for (const auto& def : corpus()) {
    auto d = load_defect(def.name);
    Baseline b = baseline_runs(d.buggy, d.train);
    for (const auto& cand : heuristic_cfa_search(d.buggy, rank_sites(coverage_matrix(d.buggy, b), RankMethod::All),
                                                 d.train, failing_of(b), b)) {
      TrainingSet ts = collect_training_data(d.buggy, cand, d.train, b);
      ++sets;
      DecisionTree t1 = train(ts), t2 = train(ts), t3 = train(ts);
      c.require(t1 == t2 && t2 == t3, def.name + ": retraining differs");
      bool conflict = false;
      for (std::size_t i = 0; i < ts.samples.size() && !conflict; ++i)
        for (std::size_t j = i + 1; j < ts.samples.size() && !conflict; ++j)
          conflict = ts.samples[i].label != ts.samples[j].label && ts.samples[i].vector == ts.samples[j].vector;
      if (conflict) continue;
      ++conflict_free;
      c.require(training_accuracy(t1, ts) == 1.0, def.name + " site " + std::to_string(cand.site_id) + " " +
                                                      pattern_name(cand.pattern) + ": accuracy below 100%");
    }
  }

  // Micro-sets of at most six rows over two categorical and one scalar
  // feature: the root split must reach the least weighted Gini among all
  // splits, enumerated here by brute force.
  std::mt19937_64 rng(41);
  std::uniform_int_distribution<int> cat(0, 2), label(0, 1), num(0, 4), size(2, 6);
  std::size_t micro = 0;
  for (int trial = 0; trial < 500; ++trial) {
    TrainingSet ts;
    ts.schema.features = {{"a#cat", FeatureKind::Cat, 0, Type::of(BaseType::Int)},
                          {"b#cat", FeatureKind::Cat, 1, Type::of(BaseType::Int)},
                          {"x#num", FeatureKind::Num, 2, Type::of(BaseType::Float)}};
    for (int i = size(rng); i > 0; --i)
      ts.samples.push_back({{Feature::category(cat(rng)), Feature::category(cat(rng)), Feature::scalar(num(rng))},
                            label(rng) ? Label::Negate : Label::Keep, "t", 0});
    DecisionTree t = train(ts);
    if (t.root().leaf) continue;
    ++micro;
    auto gini = [&](const std::function<bool(const FeatureVector&)>& side) -> std::optional<Frac> {
      std::int64_t a[2] = {0, 0}, b[2] = {0, 0};
      for (const auto& s : ts.samples) (side(s.vector) ? a : b)[s.label == Label::Negate] += 1;
      std::int64_t na = a[0] + a[1], nb = b[0] + b[1], n = na + nb;
      if (na == 0 || nb == 0) return std::nullopt;
      return Frac{n * na * nb - (a[0] * a[0] + a[1] * a[1]) * nb - (b[0] * b[0] + b[1] * b[1]) * na, n * na * nb};
    };
    std::optional<Frac> best;
    auto consider = [&](std::optional<Frac> g) {
      if (g && (!best || *g < *best)) best = g;
    };
    for (std::size_t f = 0; f < 2; ++f)
      for (std::int64_t v = 0; v <= 2; ++v) consider(gini([&](const FeatureVector& x) { return x[f].cat == v; }));
    for (double th = 0.5; th < 4; th += 1) consider(gini([&](const FeatureVector& x) { return x[2].num <= th; }));
    const SplitTest& root = t.root().test;
    auto chosen = gini([&](const FeatureVector& x) { return root.holds(x[root.feature]); });
    c.require(best && chosen && *chosen == *best, "micro-set root split is not Gini-optimal");
  }
  c.why << sets << " corpus sets, " << conflict_free << " conflict-free, " << micro << " micro-sets";
}

BenchMetrics full_bench() {
  BenchConfig cfg;
  cfg.jobs = 1;
  return bench(corpus(), cfg);
}

void criterion8(Check& c) {
  BenchMetrics m = full_bench();
  std::size_t n = m.rows.size();
  std::size_t overfit = 0;
  for (const auto& r : m.rows) overfit += r.verdict == "overfit";
  c.require(n >= 12, "corpus has fewer than 12 defects");
  c.require(m.with_candidates * 2 >= n, "under half the defects have candidates");
  c.require(m.plausible >= 3, "fewer than 3 plausible");
  c.require(m.correct >= 1, "no correct-candidate");
  c.require(overfit >= 1, "no overfit");
  c.require(m.correct + m.incorrect == m.plausible, "correct + incorrect != plausible");
  c.require(m.precision() && *m.precision() == static_cast<double>(m.correct) / static_cast<double>(m.plausible),
            "precision identity");
  c.require(m.recall() && *m.recall() == static_cast<double>(m.correct) / static_cast<double>(n), "recall identity");
  c.why << n << " defects, " << m.with_candidates << " with candidates, " << m.plausible << " plausible, " << m.correct
        << " correct, " << overfit << " overfit, precision " << ratio_text(m.precision()) << ", recall "
        << ratio_text(m.recall());
}

void criterion9(Check& c) {
  std::string a = metrics_json(full_bench()).dump(2), b = metrics_json(full_bench()).dump(2);
  c.require(a == b, "metrics JSON differs between runs");
  c.why << a.size() << " bytes identical";
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit_s;  // 0 = no runtime limit
    void (*fn)(Check&);
  };
  const Criterion criteria[] = {
      {1, "syllables guard equals ch=='y' || ch=='i'", 10, criterion1},
      {2, "grade queue head, single negate leaf, !(score > a)", 30, criterion2},
      {3, "tcas always-negate patch is plausible but overfit", 30, criterion3},
      {4, "pattern bitstrings", 0, criterion4},
      {5, "search equals brute-force oracle on micro-programs", 0, criterion5},
      {6, "patch and classifier verdicts agree", 0, criterion6},
      {7, "tree determinism, separation and Gini-optimal roots", 0, criterion7},
      {8, "corpus metrics", 600, criterion8},
      {9, "bench determinism", 0, criterion9},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Check c;
    auto start = Clock::now();
    try {
      cr.fn(c);
    } catch (const std::exception& e) {
      c.require(false, std::string("exception: ") + e.what());
    }
    double secs = std::chrono::duration<double>(Clock::now() - start).count();
    if (cr.limit_s > 0) c.require(secs < cr.limit_s, "over the runtime limit");
    std::printf("%s criterion %d: %s (%.2fs) %s\n", c.ok ? "PASS" : "FAIL", cr.id, cr.name, secs, c.why.str().c_str());
    failed += !c.ok;
  }
  return failed == 0 ? 0 : 1;
}
