#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support.hpp"

using namespace flipguard;
using namespace fg_test;

namespace {

std::vector<std::size_t> failing_of(const Baseline& b) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < b.runs.size(); ++i)
    if (!b.passed(i)) out.push_back(i);
  return out;
}

CandidateFix candidate(const LoadedDefect& d, int site, Pattern pat) {
  Baseline b = baseline_runs(d.buggy, d.train);
  for (const auto& c : heuristic_cfa_search(d.buggy, {site}, d.train, failing_of(b), b))
    if (c.pattern == pat) return c;
  ADD_FAILURE() << "no candidate at site " << site << " " << pattern_name(pat);
  return {};
}

// Schema of categorical features c0..c{k-1} plus one scalar `x`.
Schema small_schema(std::size_t cats, bool scalar) {
  Schema s;
  for (std::size_t i = 0; i < cats; ++i)
    s.features.push_back({"c" + std::to_string(i) + "#cat", FeatureKind::Cat, i, Type::of(BaseType::Int)});
  if (scalar) s.features.push_back({"x#num", FeatureKind::Num, cats, Type::of(BaseType::Float)});
  return s;
}

LabeledSample row(FeatureVector v, Label l) { return {std::move(v), l, "t", 0}; }

Feature C(std::int64_t v) { return Feature::category(v); }
Feature N(double v) { return Feature::scalar(v); }

// Walks the node array from the root with its own test semantics.
Label walk(const DecisionTree& t, const FeatureVector& v, int at = 0) {
  const TreeNode& n = t.nodes[static_cast<std::size_t>(at)];
  if (n.leaf) return n.label;
  const Feature& f = v[n.test.feature];
  bool yes;
  if (n.test.kind == FeatureKind::Num) yes = !std::isnan(f.num) && !(f.num > n.test.threshold);
  else yes = f.cat.has_value() && *f.cat == n.test.value;
  return walk(t, v, yes ? n.on_true : n.on_false);
}

bool conflict_free(const TrainingSet& ts) {
  for (std::size_t i = 0; i < ts.samples.size(); ++i)
    for (std::size_t j = i + 1; j < ts.samples.size(); ++j)
      if (ts.samples[i].label != ts.samples[j].label && ts.samples[i].vector == ts.samples[j].vector) return false;
  return true;
}

// Weighted Gini of a split as an exact fraction num/den.
struct Frac {
  std::int64_t num, den;
  bool operator<(const Frac& o) const { return static_cast<__int128>(num) * o.den < static_cast<__int128>(o.num) * den; }
  bool operator==(const Frac& o) const {
    return static_cast<__int128>(num) * o.den == static_cast<__int128>(o.num) * den;
  }
};

Frac weighted_gini(const TrainingSet& ts, const std::function<bool(const FeatureVector&)>& side) {
  std::int64_t a[2] = {0, 0}, b[2] = {0, 0};
  for (const auto& s : ts.samples) (side(s.vector) ? a : b)[s.label == Label::Negate] += 1;
  std::int64_t na = a[0] + a[1], nb = b[0] + b[1], n = na + nb;
  // sum_side (n_side/n) * (1 - sum p^2) = (n - sum_side sum_k c_k^2 / n_side) / n
  // num/den with den = n * na * nb.
  std::int64_t num = n * na * nb - (a[0] * a[0] + a[1] * a[1]) * nb - (b[0] * b[0] + b[1] * b[1]) * na;
  return {num, n * na * nb};
}

}  // namespace

TEST(Tree, PureSetsGiveASingleLeaf) {
  TrainingSet ts{small_schema(1, true), {}};
  for (int i = 0; i < 5; ++i) ts.samples.push_back(row({C(i), N(i)}, Label::Negate));
  DecisionTree t = train(ts);
  ASSERT_EQ(t.node_count(), 1u);
  EXPECT_EQ(t.root().label, Label::Negate);
  for (auto& s : ts.samples) s.label = Label::Keep;
  t = train(ts);
  ASSERT_EQ(t.node_count(), 1u);
  EXPECT_EQ(t.root().label, Label::Keep);
}

TEST(Tree, EmptySetIsATrainingError) {
  EXPECT_THROW(train(TrainingSet{small_schema(1, false), {}}), TrainingError);
}

TEST(Tree, SyllablesTreeNegatesOnlyTheLetterI) {
  auto d = load_defect("syllables_v1");
  int site = site_with_clause(d.buggy, "ch == 'y'");
  TrainingSet ts = collect_training_data(d.buggy, candidate(d, site, Pattern::Even), d.train);
  DecisionTree t = train(ts);
  EXPECT_EQ(training_accuracy(t, ts), 1.0);
  ASSERT_FALSE(t.root().leaf);
  EXPECT_EQ(t.root().test.name, "ch#cat");
  EXPECT_EQ(t.root().test.value, 'i');

  std::string words;
  for (char c = 'a'; c <= 'z'; ++c) words += std::string(1, c) + " | \"" + c + "\" | x\n";
  TestSuite letters = suite_of(words, d.buggy);
  for (const auto& tc : letters.tests) {
    RunResult guided = run(d.buggy, tc, Controller::classifier(site, tree_decider(t)));
    EXPECT_EQ(guided.output, run(d.reference, tc).output) << tc.name;
    EXPECT_EQ(guided.negations_fired.size(), tc.name == "i" ? 1u : 0u) << tc.name;
  }
}

TEST(Tree, ClassifyFollowsTheLearnedPaths) {
  auto d = load_defect("syllables_v1");
  int site = site_with_clause(d.buggy, "ch == 'y'");
  TrainingSet ts = collect_training_data(d.buggy, candidate(d, site, Pattern::Even), d.train);
  DecisionTree t = train(ts);
  FeatureVector v = ts.samples.front().vector;
  for (std::size_t f = 0; f < ts.schema.size(); ++f) {
    if (ts.schema.features[f].name == "ch#cat") v[f] = C('i');
    if (ts.schema.features[f].name == "ch#num") v[f] = N('i');
  }
  EXPECT_EQ(classify(t, v), Label::Negate);
  for (std::size_t f = 0; f < ts.schema.size(); ++f) {
    if (ts.schema.features[f].name == "ch#cat") v[f] = C('a');
    if (ts.schema.features[f].name == "ch#num") v[f] = N('a');
  }
  EXPECT_EQ(classify(t, v), Label::Keep);
}

TEST(Tree, ClassifyAgreesWithAnIndependentWalker) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> cat(0, 3), label(0, 1);
  std::uniform_real_distribution<double> x(-10, 10);
  TrainingSet ts{small_schema(2, true), {}};
  for (int i = 0; i < 60; ++i)
    ts.samples.push_back(row({C(cat(rng)), C(cat(rng)), N(std::round(x(rng)))}, label(rng) ? Label::Negate : Label::Keep));
  DecisionTree t = train(ts);
  EXPECT_GT(t.node_count(), 1u);
  for (int i = 0; i < 100; ++i) {
    FeatureVector v{cat(rng) == 3 ? Feature::category(std::nullopt) : C(cat(rng)), C(cat(rng)),
                    i % 10 == 0 ? N(NAN) : N(x(rng))};
    EXPECT_EQ(classify(t, v), walk(t, v));
  }
}

TEST(Tree, WrongWidthIsASchemaError) {
  TrainingSet ts{small_schema(1, false), {row({C(1)}, Label::Negate), row({C(2)}, Label::Keep)}};
  DecisionTree t = train(ts);
  EXPECT_THROW(classify(t, {C(1), C(2)}), SchemaError);
  EXPECT_THROW(classify(t, {}), SchemaError);
}

TEST(Tree, ConflictFreeCorpusSetsAreSeparatedExactly) {
  int checked = 0;
  for (const auto& c : corpus()) {
    auto d = load_defect(c.name);
    Baseline b = baseline_runs(d.buggy, d.train);
    auto queue = heuristic_cfa_search(d.buggy, rank_sites(coverage_matrix(d.buggy, b), RankMethod::All), d.train,
                                      failing_of(b), b);
    for (const auto& cand : queue) {
      TrainingSet ts = collect_training_data(d.buggy, cand, d.train, b);
      if (!conflict_free(ts)) continue;
      DecisionTree t = train(ts, {64, 1});
      EXPECT_EQ(training_accuracy(t, ts), 1.0) << c.name << " site " << cand.site_id << " " << pattern_name(cand.pattern);
      ++checked;
    }
  }
  EXPECT_GT(checked, 10);
}

TEST(Tree, PerfectSeparationOnOneScalar) {
  TrainingSet ts{small_schema(0, true), {}};
  for (int i = 0; i < 10; ++i) ts.samples.push_back(row({N(i)}, i < 4 ? Label::Negate : Label::Keep));
  DecisionTree t = train(ts);
  ASSERT_EQ(t.node_count(), 3u);
  EXPECT_EQ(t.root().test.threshold, 3.5);
  EXPECT_EQ(t.nodes[static_cast<std::size_t>(t.root().on_true)].label, Label::Negate);
  EXPECT_EQ(training_accuracy(t, ts), 1.0);
}

TEST(Tree, ZeroGainSplitsStillSeparateXor) {
  TrainingSet ts{small_schema(2, false), {}};
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) ts.samples.push_back(row({C(a), C(b)}, (a ^ b) ? Label::Negate : Label::Keep));
  DecisionTree t = train(ts);
  EXPECT_EQ(training_accuracy(t, ts), 1.0);
  EXPECT_EQ(t.depth(), 2);
}

TEST(Tree, AbsentScalarsSplitFromPresentOnes) {
  TrainingSet ts{small_schema(0, true), {row({N(NAN)}, Label::Negate), row({N(1)}, Label::Keep), row({N(2)}, Label::Keep)}};
  DecisionTree t = train(ts);
  EXPECT_EQ(training_accuracy(t, ts), 1.0);
  EXPECT_EQ(classify(t, {N(NAN)}), Label::Negate);
}

TEST(Tree, TrainingIsDeterministic) {
  auto d = load_defect("tcas_v1");
  TrainingSet ts = collect_training_data(d.buggy, candidate(d, 0, Pattern::All), d.train);
  EXPECT_EQ(train(ts), train(ts));
  EXPECT_EQ(format_tree(train(ts)), format_tree(train(ts)));
}

TEST(Tree, RootSplitMinimizesWeightedGini) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> cat(0, 2), label(0, 1), num(0, 5);
  for (int trial = 0; trial < 30; ++trial) {
    TrainingSet ts{small_schema(2, true), {}};
    for (int i = 0; i < 12; ++i)
      ts.samples.push_back(row({C(cat(rng)), C(cat(rng)), N(num(rng))}, label(rng) ? Label::Negate : Label::Keep));
    DecisionTree t = train(ts);
    if (t.root().leaf) continue;

    std::optional<Frac> best;
    for (std::size_t f = 0; f < 2; ++f)
      for (std::int64_t v = 0; v <= 2; ++v) {
        Frac g = weighted_gini(ts, [&](const FeatureVector& x) { return x[f].cat == v; });
        if (g.den != 0 && (!best || g < *best)) best = g;
      }
    for (double th = 0.5; th < 5; th += 1.0) {
      Frac g = weighted_gini(ts, [&](const FeatureVector& x) { return x[2].num <= th; });
      if (g.den != 0 && (!best || g < *best)) best = g;
    }
    ASSERT_TRUE(best);
    const SplitTest& root = t.root().test;
    Frac chosen = weighted_gini(ts, [&](const FeatureVector& x) { return root.holds(x[root.feature]); });
    EXPECT_EQ(chosen, *best) << "trial " << trial;
  }
}

TEST(Tree, DepthAndMinSamplesLimits) {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<int> cat(0, 5), label(0, 1);
  TrainingSet ts{small_schema(3, false), {}};
  for (int i = 0; i < 80; ++i)
    ts.samples.push_back(row({C(cat(rng)), C(cat(rng)), C(cat(rng))}, label(rng) ? Label::Negate : Label::Keep));
  for (int depth : {0, 1, 2, 3}) EXPECT_LE(train(ts, {depth, 1}).depth(), depth);
  DecisionTree t = train(ts, {8, 5});
  for (const auto& n : t.nodes)
    if (!n.leaf) {
      for (int child : {n.on_true, n.on_false}) {
        const TreeNode& c = t.nodes[static_cast<std::size_t>(child)];
        EXPECT_GE(c.negate_count + c.keep_count, 5u);
      }
    }
}

TEST(Tree, FormatShowsTestsAndLeafCounts) {
  TrainingSet ts{small_schema(0, true), {}};
  for (int i = 0; i < 4; ++i) ts.samples.push_back(row({N(i)}, i < 1 ? Label::Negate : Label::Keep));
  EXPECT_EQ(format_tree(train(ts)),
            "if x#num <= 0.5\n"
            "  then: negate (negate=1, keep=0)\n"
            "  else: keep (negate=0, keep=3)\n");
}

TEST(Plausible, GradeAndTcasTreesPassTheirTrainingSuites) {
  for (const auto& [name, clause] : std::vector<std::pair<std::string, std::string>>{
           {"grade_v13", "score > a"}, {"tcas_v1", "(down_sep > alim(level))"}}) {
    auto d = load_defect(name);
    int site = site_with_clause(d.buggy, clause);
    TrainingSet ts = collect_training_data(d.buggy, candidate(d, site, Pattern::All), d.train);
    DecisionTree t = train(ts);
    Plausibility p = is_plausible(d.buggy, site, t, d.train);
    EXPECT_TRUE(p.plausible) << name;
    EXPECT_EQ(p.runs.size(), d.train.tests.size());
  }
}

TEST(Plausible, AKeepLeafReproducesTheBug) {
  auto d = load_defect("grade_v13");
  int site = site_with_clause(d.buggy, "score > a");
  TrainingSet ts{schema_for(d.buggy.sites[static_cast<std::size_t>(site)]), {}};
  ts.samples.push_back(row(FeatureVector(ts.schema.size(), N(0)), Label::Keep));
  for (std::size_t f = 0; f < ts.schema.size(); ++f)
    if (ts.schema.features[f].kind == FeatureKind::Cat) ts.samples[0].vector[f] = C(0);
  EXPECT_FALSE(is_plausible(d.buggy, site, train(ts), d.train).plausible);
}
