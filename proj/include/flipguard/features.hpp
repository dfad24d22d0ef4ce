#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "flipguard/interp.hpp"
#include "flipguard/search.hpp"

namespace flipguard {

enum class FeatureKind { Num, Cat };

// A feature value. Scalars carry `num` (NaN when absent); categoricals carry
// `cat`, with nullopt standing for the absent marker.
struct Feature {
  FeatureKind kind = FeatureKind::Num;
  double num = std::numeric_limits<double>::quiet_NaN();
  std::optional<std::int64_t> cat;

  static Feature scalar(double v) { return {FeatureKind::Num, v, std::nullopt}; }
  static Feature category(std::optional<std::int64_t> v) {
    return {FeatureKind::Cat, std::numeric_limits<double>::quiet_NaN(), v};
  }

  friend bool operator==(const Feature& a, const Feature& b) {
    if (a.kind != b.kind) return false;
    if (a.kind == FeatureKind::Cat) return a.cat == b.cat;
    return (std::isnan(a.num) && std::isnan(b.num)) || a.num == b.num;
  }
};

struct FeatureSpec {
  std::string name;  // `x#num` or `x#cat`
  FeatureKind kind = FeatureKind::Num;
  std::size_t binding = 0;  // index into the site's captures
  Type type;                // type of the source binding
};

struct Schema {
  std::vector<FeatureSpec> features;

  std::size_t size() const { return features.size(); }
  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& f : features) out.push_back(f.name);
    return out;
  }
  friend bool operator==(const Schema& a, const Schema& b) { return a.names() == b.names(); }
};

inline bool has_num(Type t) { return !t.array && t.base != BaseType::String; }
inline bool has_cat(Type t) { return t.array || t.base != BaseType::Float; }

// Categorical code: ints, chars and bools are their own value; strings and
// arrays use the polynomial hash.
inline std::int64_t category_of(const Value& v) {
  if (v.is_int()) return v.as_int();
  if (v.is_char()) return static_cast<std::int64_t>(v.as_char());
  if (v.is_bool()) return v.as_bool() ? 1 : 0;
  return value_hash(v);
}

inline std::vector<std::pair<std::string, Feature>> encode_value(const std::string& name, Type type,
                                                                 const std::optional<Value>& v) {
  std::vector<std::pair<std::string, Feature>> out;
  if (has_num(type)) out.emplace_back(name + "#num", v ? Feature::scalar(v->numeric()) : Feature::scalar(NAN));
  if (has_cat(type))
    out.emplace_back(name + "#cat", v ? Feature::category(category_of(*v)) : Feature::category(std::nullopt));
  return out;
}

inline std::vector<std::pair<std::string, Feature>> encode_value(const std::string& name, const Value& v) {
  Type t;
  if (v.is_int()) t = Type::of(BaseType::Int);
  else if (v.is_float()) t = Type::of(BaseType::Float);
  else if (v.is_char()) t = Type::of(BaseType::Char);
  else if (v.is_string()) t = Type::of(BaseType::String);
  else if (v.is_bool()) t = Type::of(BaseType::Bool);
  else t = Type::array_of(BaseType::Int);
  return encode_value(name, t, v);
}

inline Schema schema_for(const PredicateSite& site) {
  Schema s;
  for (std::size_t i = 0; i < site.captures.size(); ++i) {
    const Binding& b = site.captures[i];
    for (auto& [name, f] : encode_value(b.name, b.type, std::nullopt)) s.features.push_back({name, f.kind, i, b.type});
  }
  return s;
}

using FeatureVector = std::vector<Feature>;  // aligned with a Schema

inline FeatureVector encode_snapshot(const Schema& schema, const StateSnapshot& snap) {
  FeatureVector v;
  v.reserve(schema.size());
  for (const auto& spec : schema.features) {
    const auto& value = snap.bindings[spec.binding].second;
    if (spec.kind == FeatureKind::Num) v.push_back(Feature::scalar(value ? value->numeric() : NAN));
    else v.push_back(Feature::category(value ? std::optional<std::int64_t>(category_of(*value)) : std::nullopt));
  }
  return v;
}

enum class Label { Keep, Negate };

inline const char* to_string(Label l) { return l == Label::Negate ? "negate" : "keep"; }

struct LabeledSample {
  FeatureVector vector;
  Label label = Label::Keep;
  std::string test;
  std::int64_t instance = 0;
};

struct TrainingSet {
  Schema schema;
  std::vector<LabeledSample> samples;

  std::size_t count(Label l) const {
    std::size_t n = 0;
    for (const auto& s : samples) n += s.label == l;
    return n;
  }
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Negate rows come from the candidate's fixed failing tests, replayed under
// its pattern: an instance is negate iff the pattern negated it. Every
// instance of a passing test is keep. Unfixed failing tests are left out.
inline TrainingSet collect_training_data(const Program& p, const CandidateFix& c, const TestSuite& suite,
                                         const Baseline& base, std::int64_t budget = kDefaultStepBudget) {
  const PredicateSite& site = p.sites.at(static_cast<std::size_t>(c.site_id));
  TrainingSet ts;
  ts.schema = schema_for(site);
  std::set<std::string> fixed(c.fixed_tests.begin(), c.fixed_tests.end());
  for (std::size_t t = 0; t < suite.tests.size(); ++t) {
    const TestCase& tc = suite.tests[t];
    RunResult r;
    if (base.passed(t)) {
      r = run(p, tc, Controller::observe(c.site_id), budget);
    } else if (fixed.count(tc.name)) {
      r = run(p, tc, Controller::pattern(c.site_id, negation_plan(c.pattern, base.count(t, c.site_id)), true), budget);
    } else {
      continue;
    }
    std::set<std::int64_t> fired(r.negations_fired.begin(), r.negations_fired.end());
    for (const auto& snap : r.snapshots)
      ts.samples.push_back(
          {encode_snapshot(ts.schema, snap), fired.count(snap.instance) ? Label::Negate : Label::Keep, tc.name,
           snap.instance});
  }
  if (ts.samples.empty())
    throw TrainingError("site " + std::to_string(c.site_id) + " is never executed by a passing or fixed test");
  return ts;
}

inline TrainingSet collect_training_data(const Program& p, const CandidateFix& c, const TestSuite& suite,
                                         std::int64_t budget = kDefaultStepBudget) {
  return collect_training_data(p, c, suite, baseline_runs(p, suite, budget), budget);
}

inline std::string feature_text(const Feature& f) {
  if (f.kind == FeatureKind::Cat) return f.cat ? std::to_string(*f.cat) : "⊥";
  return std::isnan(f.num) ? "nan" : format_float(f.num);
}

// Tab-separated: a header of feature names plus `label`, then one row per
// sample.
inline std::string dump_training_set(const TrainingSet& ts) {
  std::string out;
  for (const auto& f : ts.schema.features) out += f.name + "\t";
  out += "label\n";
  for (const auto& s : ts.samples) {
    for (const auto& f : s.vector) out += feature_text(f) + "\t";
    out += to_string(s.label);
    out += '\n';
  }
  return out;
}

}  // namespace flipguard
