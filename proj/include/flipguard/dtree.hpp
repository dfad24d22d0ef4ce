#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "flipguard/features.hpp"
#include "flipguard/interp.hpp"

namespace flipguard {

// Scalar tests are `f <= threshold`; categorical tests are `f == value`.
// Samples that satisfy the test go to the true child.
struct SplitTest {
  std::size_t feature = 0;
  std::string name;
  FeatureKind kind = FeatureKind::Num;
  double threshold = 0;
  std::int64_t value = 0;

  bool holds(const Feature& f) const {
    if (kind == FeatureKind::Num) return f.num <= threshold;  // NaN fails
    return f.cat && *f.cat == value;
  }
  friend bool operator==(const SplitTest& a, const SplitTest& b) {
    return a.feature == b.feature && a.name == b.name && a.kind == b.kind &&
           (a.kind == FeatureKind::Num ? a.threshold == b.threshold : a.value == b.value);
  }
};

struct TreeNode {
  bool leaf = true;
  Label label = Label::Keep;
  std::size_t negate_count = 0;
  std::size_t keep_count = 0;
  SplitTest test;
  int on_true = -1;
  int on_false = -1;

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct TreeParams {
  int max_depth = 8;
  std::size_t min_samples = 1;  // minimum samples in each child of a split

  friend bool operator==(const TreeParams&, const TreeParams&) = default;
};

struct DecisionTree {
  Schema schema;
  TreeParams params;
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  const TreeNode& root() const { return nodes.front(); }
  std::size_t node_count() const { return nodes.size(); }
  std::size_t leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.leaf; }));
  }
  int depth(int at = 0) const {
    const TreeNode& n = nodes[static_cast<std::size_t>(at)];
    if (n.leaf) return 0;
    return 1 + std::max(depth(n.on_true), depth(n.on_false));
  }

  friend bool operator==(const DecisionTree& a, const DecisionTree& b) {
    return a.schema == b.schema && a.params == b.params && a.nodes == b.nodes;
  }
};

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

struct Counts {
  std::int64_t negate = 0;
  std::int64_t keep = 0;
  std::int64_t total() const { return negate + keep; }
  bool pure() const { return negate == 0 || keep == 0; }
};

// Purity score of a split: sum over children of (a^2 + b^2) / n. Higher is
// better and equals lower weighted Gini impurity. Kept as a fraction so
// comparisons are exact.
struct SplitScore {
  __int128 num = 0;
  __int128 den = 1;

  static SplitScore of(Counts t, Counts f) {
    auto sq = [](Counts c) { return static_cast<__int128>(c.negate) * c.negate + static_cast<__int128>(c.keep) * c.keep; };
    __int128 nt = t.total(), nf = f.total();
    return {sq(t) * nf + sq(f) * nt, nt * nf};
  }
  bool better_than(const SplitScore& o) const { return num * o.den > o.num * den; }
};

class TreeBuilder {
 public:
  TreeBuilder(const TrainingSet& ts, TreeParams params) : ts_(ts), params_(params) {}

  DecisionTree build() {
    DecisionTree t;
    t.schema = ts_.schema;
    t.params = params_;
    std::vector<std::size_t> rows(ts_.samples.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    grow(t, rows, 0);
    return t;
  }

 private:
  const TrainingSet& ts_;
  TreeParams params_;

  Counts counts(const std::vector<std::size_t>& rows) const {
    Counts c;
    for (std::size_t r : rows) (ts_.samples[r].label == Label::Negate ? c.negate : c.keep) += 1;
    return c;
  }

  const Feature& at(std::size_t row, std::size_t feature) const { return ts_.samples[row].vector[feature]; }

  std::vector<SplitTest> candidates(const std::vector<std::size_t>& rows, std::size_t f) const {
    const FeatureSpec& spec = ts_.schema.features[f];
    std::vector<SplitTest> out;
    if (spec.kind == FeatureKind::Num) {
      std::vector<double> values;
      bool has_nan = false;
      for (std::size_t r : rows) {
        double v = at(r, f).num;
        if (std::isnan(v)) has_nan = true;
        else values.push_back(v);
      }
      std::sort(values.begin(), values.end());
      values.erase(std::unique(values.begin(), values.end()), values.end());
      for (std::size_t i = 0; i + 1 < values.size(); ++i) {
        double mid = values[i] + (values[i + 1] - values[i]) / 2;
        if (!(mid < values[i + 1])) mid = values[i];
        out.push_back({f, spec.name, FeatureKind::Num, mid, 0});
      }
      // `f <= max` separates present values from absent ones.
      if (has_nan && !values.empty()) out.push_back({f, spec.name, FeatureKind::Num, values.back(), 0});
    } else {
      std::vector<std::int64_t> values;
      for (std::size_t r : rows)
        if (auto c = at(r, f).cat) values.push_back(*c);
      std::sort(values.begin(), values.end());
      values.erase(std::unique(values.begin(), values.end()), values.end());
      for (std::int64_t v : values) out.push_back({f, spec.name, FeatureKind::Cat, 0, v});
    }
    return out;
  }

  int grow(DecisionTree& t, const std::vector<std::size_t>& rows, int depth) {
    Counts c = counts(rows);
    int index = static_cast<int>(t.nodes.size());
    TreeNode node;
    node.negate_count = static_cast<std::size_t>(c.negate);
    node.keep_count = static_cast<std::size_t>(c.keep);
    node.label = c.negate > c.keep ? Label::Negate : Label::Keep;
    t.nodes.push_back(node);
    if (c.pure() || depth >= params_.max_depth) return index;

    std::optional<SplitTest> best;
    SplitScore best_score;
    std::size_t min = std::max<std::size_t>(params_.min_samples, 1);
    for (std::size_t f = 0; f < ts_.schema.size(); ++f) {
      for (const SplitTest& s : candidates(rows, f)) {
        Counts yes, no;
        for (std::size_t r : rows) {
          Counts& side = s.holds(at(r, f)) ? yes : no;
          (ts_.samples[r].label == Label::Negate ? side.negate : side.keep) += 1;
        }
        if (static_cast<std::size_t>(yes.total()) < min || static_cast<std::size_t>(no.total()) < min) continue;
        SplitScore score = SplitScore::of(yes, no);
        if (!best || score.better_than(best_score)) {
          best = s;
          best_score = score;
        }
      }
    }
    if (!best) return index;

    std::vector<std::size_t> yes, no;
    for (std::size_t r : rows) (best->holds(at(r, best->feature)) ? yes : no).push_back(r);
    int on_true = grow(t, yes, depth + 1);
    int on_false = grow(t, no, depth + 1);
    TreeNode& n = t.nodes[static_cast<std::size_t>(index)];
    n.leaf = false;
    n.test = *best;
    n.on_true = on_true;
    n.on_false = on_false;
    return index;
  }
};

}  // namespace detail

// Greedy top-down induction on Gini impurity. Splits are taken while a node
// is impure and below max_depth, even at zero gain, so that training data
// without conflicting rows is separated completely.
inline DecisionTree train(const TrainingSet& ts, TreeParams params = {}) {
  if (ts.samples.empty()) throw TrainingError("cannot train on an empty training set");
  return detail::TreeBuilder(ts, params).build();
}

inline Label classify(const DecisionTree& t, const FeatureVector& v) {
  if (v.size() != t.schema.size())
    throw SchemaError("feature vector has " + std::to_string(v.size()) + " features, tree expects " +
                      std::to_string(t.schema.size()));
  const TreeNode* n = &t.root();
  while (!n->leaf) n = &t.nodes[static_cast<std::size_t>(n->test.holds(v[n->test.feature]) ? n->on_true : n->on_false)];
  return n->label;
}

inline double training_accuracy(const DecisionTree& t, const TrainingSet& ts) {
  if (ts.samples.empty()) return 1.0;
  std::size_t hits = 0;
  for (const auto& s : ts.samples) hits += classify(t, s.vector) == s.label;
  return static_cast<double>(hits) / static_cast<double>(ts.samples.size());
}

inline std::string test_text(const SplitTest& s) {
  if (s.kind == FeatureKind::Num) return s.name + " <= " + format_float(s.threshold);
  return s.name + " == " + std::to_string(s.value);
}

// One node per line, children indented under their parent, true branch first.
inline std::string format_tree(const DecisionTree& t) {
  std::string out;
  auto walk = [&](auto&& self, int at, int depth, const char* edge) -> void {
    const TreeNode& n = t.nodes[static_cast<std::size_t>(at)];
    out.append(static_cast<std::size_t>(depth) * 2, ' ');
    out += edge;
    if (n.leaf) {
      out += std::string(to_string(n.label)) + " (negate=" + std::to_string(n.negate_count) +
             ", keep=" + std::to_string(n.keep_count) + ")\n";
      return;
    }
    out += "if " + test_text(n.test) + "\n";
    self(self, n.on_true, depth + 1, "then: ");
    self(self, n.on_false, depth + 1, "else: ");
  };
  walk(walk, 0, 0, "");
  return out;
}

inline std::function<bool(const StateSnapshot&)> tree_decider(const DecisionTree& t) {
  return [&t](const StateSnapshot& snap) { return classify(t, encode_snapshot(t.schema, snap)) == Label::Negate; };
}

// Capture indices that some split of `t` reads.
inline std::vector<bool> bindings_read(const DecisionTree& t, std::size_t captures) {
  std::vector<bool> out(captures, false);
  for (const auto& n : t.nodes)
    if (!n.leaf) out[t.schema.features[n.test.feature].binding] = true;
  return out;
}

struct Plausibility {
  bool plausible = false;
  std::vector<RunResult> runs;  // suite order
};

// Runs every test with the tree deciding, at each execution of the site,
// whether to negate it. Plausible iff every test passes.
inline Plausibility is_plausible(const Program& p, int site, const DecisionTree& t, const TestSuite& suite,
                                 std::int64_t budget = kDefaultStepBudget, bool capture = false) {
  Plausibility out;
  out.plausible = true;
  Controller c = Controller::classifier(site, tree_decider(t), capture);
  c.reads = bindings_read(t, p.sites[static_cast<std::size_t>(site)].captures.size());
  for (const auto& tc : suite.tests) {
    out.runs.push_back(run(p, tc, c, budget));
    out.plausible = out.plausible && out.runs.back().passed;
  }
  return out;
}

}  // namespace flipguard
