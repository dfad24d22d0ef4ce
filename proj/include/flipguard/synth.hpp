#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "flipguard/diff.hpp"
#include "flipguard/dtree.hpp"
#include "flipguard/emit.hpp"
#include "flipguard/lower.hpp"
#include "flipguard/resolve.hpp"

namespace flipguard {

struct Literal {
  enum class Op { Le, Gt, Eq, Ne };
  std::size_t feature = 0;
  std::string name;
  Op op = Op::Le;
  double threshold = 0;
  std::int64_t value = 0;

  bool holds(const Feature& f) const {
    switch (op) {
      case Op::Le: return f.num <= threshold;
      case Op::Gt: return !(f.num <= threshold);
      case Op::Eq: return f.cat && *f.cat == value;
      case Op::Ne: return !(f.cat && *f.cat == value);
    }
    return false;
  }
  friend bool operator==(const Literal&, const Literal&) = default;
};

// Disjunction of conjunctions. No clauses is constant false; a single empty
// clause is constant true.
struct DNF {
  std::vector<std::vector<Literal>> clauses;

  bool is_false() const { return clauses.empty(); }
  bool is_true() const {
    return std::any_of(clauses.begin(), clauses.end(), [](const auto& c) { return c.empty(); });
  }
  bool holds(const FeatureVector& v) const {
    for (const auto& c : clauses)
      if (std::all_of(c.begin(), c.end(), [&](const Literal& l) { return l.holds(v[l.feature]); })) return true;
    return false;
  }
};

inline Literal literal_for(const SplitTest& t, bool taken) {
  Literal l;
  l.feature = t.feature;
  l.name = t.name;
  l.threshold = t.threshold;
  l.value = t.value;
  if (t.kind == FeatureKind::Num) l.op = taken ? Literal::Op::Le : Literal::Op::Gt;
  else l.op = taken ? Literal::Op::Eq : Literal::Op::Ne;
  return l;
}

// One conjunction per negate leaf: the tests along its path, negated on
// false edges.
inline DNF tree_to_dnf(const DecisionTree& t) {
  DNF d;
  std::vector<Literal> path;
  auto walk = [&](auto&& self, int at) -> void {
    const TreeNode& n = t.nodes[static_cast<std::size_t>(at)];
    if (n.leaf) {
      if (n.label == Label::Negate) d.clauses.push_back(path);
      return;
    }
    path.push_back(literal_for(n.test, true));
    self(self, n.on_true);
    path.back() = literal_for(n.test, false);
    self(self, n.on_false);
    path.pop_back();
  };
  walk(walk, 0);
  return d;
}

// Drops literals implied by another literal on the same feature within a
// clause: the tightest bound wins and an equality subsumes disequalities.
inline DNF simplify(const DNF& d) {
  DNF out;
  for (const auto& clause : d.clauses) {
    std::vector<Literal> kept;
    for (std::size_t i = 0; i < clause.size(); ++i) {
      const Literal& l = clause[i];
      bool implied = false;
      for (std::size_t j = 0; j < clause.size() && !implied; ++j) {
        if (i == j || clause[j].feature != l.feature) continue;
        const Literal& o = clause[j];
        bool tie_break = j < i;  // keep the first of two identical literals
        switch (l.op) {
          case Literal::Op::Le:
            implied = o.op == Literal::Op::Le && (o.threshold < l.threshold || (o.threshold == l.threshold && tie_break));
            break;
          case Literal::Op::Gt:
            implied = o.op == Literal::Op::Gt && (o.threshold > l.threshold || (o.threshold == l.threshold && tie_break));
            break;
          case Literal::Op::Eq: implied = o.op == Literal::Op::Eq && o.value == l.value && tie_break; break;
          case Literal::Op::Ne:
            implied = (o.op == Literal::Op::Eq && o.value != l.value) ||
                      (o.op == Literal::Op::Ne && o.value == l.value && tie_break);
            break;
        }
      }
      if (!implied) kept.push_back(l);
    }
    out.clauses.push_back(std::move(kept));
  }
  return out;
}

class SynthesisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline Expr literal_expr(Value v, Type t) { return make_expr(LiteralExpr{std::move(v)}, t); }

inline Expr compare_expr(BinOp op, Expr lhs, Expr rhs) {
  return make_expr(BinaryExpr{op, box<Expr>(std::move(lhs)), box<Expr>(std::move(rhs)), -1, {}},
                   Type::of(BaseType::Bool));
}

inline Expr char_or_int(std::int64_t k) {
  if (k >= 0 && k <= 0x10FFFF && !(k >= 0xD800 && k <= 0xDFFF))
    return literal_expr(Value(static_cast<char32_t>(k)), Type::of(BaseType::Char));
  return literal_expr(Value(k), Type::of(BaseType::Int));
}

// Source form of one literal over the binding it was encoded from.
inline Expr render_literal(const Literal& l, const Binding& b) {
  const Expr& x = b.expr;
  Type t = b.type;
  bool le = l.op == Literal::Op::Le;
  if (l.op == Literal::Op::Le || l.op == Literal::Op::Gt) {
    BinOp op = le ? BinOp::Le : BinOp::Gt;
    if (t.is(BaseType::Float))
      return compare_expr(op, x, literal_expr(Value(l.threshold), Type::of(BaseType::Float)));
    if (t.is(BaseType::Bool)) {
      // Booleans encode as 0/1: `b <= θ` holds for false iff θ >= 0, for true iff θ >= 1.
      bool for_false = l.threshold >= 0, for_true = l.threshold >= 1;
      if (!le) for_false = !for_false, for_true = !for_true;
      if (for_false == for_true) return literal_expr(Value(for_false), Type::of(BaseType::Bool));
      return compare_expr(BinOp::Eq, x, literal_expr(Value(for_true), Type::of(BaseType::Bool)));
    }
    // Integral: x <= θ  <=>  x <= floor(θ).
    auto bound = static_cast<std::int64_t>(std::floor(l.threshold));
    if (t.is(BaseType::Char)) return compare_expr(op, x, char_or_int(bound));
    return compare_expr(op, x, literal_expr(Value(bound), Type::of(BaseType::Int)));
  }
  BinOp op = l.op == Literal::Op::Eq ? BinOp::Eq : BinOp::Ne;
  if (t.is(BaseType::Int)) return compare_expr(op, x, literal_expr(Value(l.value), t));
  if (t.is(BaseType::Char)) return compare_expr(op, x, char_or_int(l.value));
  if (t.is(BaseType::Bool)) return compare_expr(op, x, literal_expr(Value(l.value != 0), t));
  CallExpr h;
  h.callee = "hash";
  h.args.push_back(x);
  h.intrinsic = Intrinsic::Hash;
  return compare_expr(op, make_expr(std::move(h), Type::of(BaseType::Int)),
                      literal_expr(Value(l.value), Type::of(BaseType::Int)));
}

inline Expr join(BinOp op, std::vector<Expr> parts) {
  Expr acc = std::move(parts.front());
  for (std::size_t i = 1; i < parts.size(); ++i)
    acc = make_expr(BinaryExpr{op, box<Expr>(std::move(acc)), box<Expr>(std::move(parts[i])), -1, {}},
                    Type::of(BaseType::Bool));
  return acc;
}

inline void collect_names(const Expr& e, std::set<std::string>& out) {
  if (auto v = e.as<VarExpr>()) out.insert(v->name);
  else if (auto ix = e.as<IndexExpr>()) collect_names(*ix->base, out), collect_names(*ix->index, out);
  else if (auto c = e.as<CallExpr>()) for (const auto& a : c->args) collect_names(a, out);
  else if (auto u = e.as<UnaryExpr>()) collect_names(*u->operand, out);
  else if (auto b = e.as<BinaryExpr>()) collect_names(*b->lhs, out), collect_names(*b->rhs, out);
}

inline Expr* find_site(Expr& e, int site) {
  if (auto b = e.as<BinaryExpr>()) {
    if (b->site == site) return &e;
    if (Expr* r = find_site(*b->lhs, site)) return r;
    return find_site(*b->rhs, site);
  }
  if (auto u = e.as<UnaryExpr>()) return find_site(*u->operand, site);
  return nullptr;
}

}  // namespace detail

// The guard as a source expression over the site's bindings. Each
// conjunction of several literals is parenthesized literal by literal.
inline Expr render_guard(const DNF& d, const PredicateSite& site, const Schema& schema) {
  if (d.is_true()) return detail::literal_expr(Value(true), Type::of(BaseType::Bool));
  if (d.is_false()) return detail::literal_expr(Value(false), Type::of(BaseType::Bool));
  std::vector<Expr> clauses;
  for (const auto& clause : d.clauses) {
    std::vector<Expr> lits;
    for (const auto& l : clause) {
      if (l.feature >= schema.size() || schema.features[l.feature].name != l.name)
        throw SynthesisError("literal on unknown feature '" + l.name + "'");
      const FeatureSpec& spec = schema.features[l.feature];
      if (spec.binding >= site.captures.size()) throw SynthesisError("feature '" + l.name + "' has no binding at the site");
      lits.push_back(detail::render_literal(l, site.captures[spec.binding]));
      if (clause.size() > 1) lits.back().parens = true;
    }
    Expr conj = detail::join(BinOp::And, std::move(lits));
    if (clause.size() > 1 && d.clauses.size() > 1) conj.parens = true;
    clauses.push_back(std::move(conj));
  }
  return detail::join(BinOp::Or, std::move(clauses));
}

struct Patch {
  int site_id = -1;
  DNF dnf;
  std::string guard_expr;                                 // rendered guard
  std::string condition;                                  // the site's clause after patching
  std::vector<std::pair<std::string, std::string>> temps;  // materialized (name, call)
  std::string source;                                     // patched program text
  Program program;                                        // patched, resolved and lowered
};

namespace detail {

class Splicer {
 public:
  Splicer(Program& p, const PredicateSite& site, Expr guard, bool negate_only)
      : p_(p), site_(site), guard_(std::move(guard)), negate_only_(negate_only) {}

  std::vector<std::pair<std::string, std::string>> run() {
    Function& f = p_.functions.at(static_cast<std::size_t>(site_.function_index));
    fn_ = &f;
    if (!splice(f.body)) throw SynthesisError("site " + std::to_string(site_.id) + " not found");
    return temps_;
  }

  const std::string& condition() const { return condition_; }

 private:
  Program& p_;
  const PredicateSite& site_;
  Expr guard_;
  bool negate_only_;
  Function* fn_ = nullptr;
  std::vector<std::pair<std::string, std::string>> temps_;
  std::string condition_;

  // Rewrites the site inside `cond`; returns the temp declarations and the
  // reassignments that must accompany it.
  bool rewrite(Expr& cond, std::vector<Stmt>& decls, std::vector<Stmt>& reassign) {
    Expr* at = find_site(cond, site_.id);
    if (!at) return false;
    auto& bin = *at->as<BinaryExpr>();
    std::set<std::string> used;
    collect_names(guard_, used);
    std::vector<HoistedCall> keep;
    for (auto& h : bin.hoisted) {
      if (!used.count(h.temp)) {
        keep.push_back(std::move(h));
        continue;
      }
      Type t = fn_->slot_types[static_cast<std::size_t>(h.slot)];
      temps_.emplace_back(h.temp, emit_expr(*h.call));
      Stmt d;
      d.node = DeclStmt{t, h.temp, *h.call, h.slot};
      decls.push_back(std::move(d));
      Stmt a;
      a.node = AssignStmt{make_expr(VarExpr{h.temp, Slot{Scope::Local, h.slot}}, t), *h.call};
      reassign.push_back(std::move(a));
    }
    bin.hoisted = std::move(keep);
    Expr clause = std::move(*at);
    if (negate_only_) {
      clause.parens = true;
      *at = make_expr(UnaryExpr{UnOp::Not, box<Expr>(std::move(clause))}, Type::of(BaseType::Bool));
    } else {
      Expr guard = std::move(guard_);
      guard.parens = true;
      *at = make_expr(BinaryExpr{BinOp::Xor, box<Expr>(std::move(clause)), box<Expr>(std::move(guard)), -1, {}},
                      Type::of(BaseType::Bool));
    }
    condition_ = emit_expr(*at);
    return true;
  }

  bool splice(Block& b) {
    for (std::size_t i = 0; i < b.stmts.size(); ++i) {
      Stmt& s = b.stmts[i];
      std::vector<Stmt> decls, reassign;
      if (auto w = s.as<WhileStmt>()) {
        if (rewrite(w->cond, decls, reassign)) {
          for (auto& r : reassign) w->body.stmts.push_back(std::move(r));
          b.stmts.insert(b.stmts.begin() + static_cast<std::ptrdiff_t>(i), decls.begin(), decls.end());
          return true;
        }
        if (splice(w->body)) return true;
      } else if (auto f = s.as<IfStmt>()) {
        if (rewrite(f->cond, decls, reassign)) {
          b.stmts.insert(b.stmts.begin() + static_cast<std::ptrdiff_t>(i), decls.begin(), decls.end());
          return true;
        }
        if (splice(f->then_block)) return true;
        if (f->else_block && splice(*f->else_block)) return true;
      }
    }
    return false;
  }
};

}  // namespace detail

// Replaces the site's clause c with `c ^ (guard)`; a constant-true guard
// gives `!(c)` and a constant-false one leaves the program unchanged. Hoisted
// call temporaries referenced by the guard become real locals.
inline Patch synthesize_patch(const Program& p, int site_id, const DNF& d, const Schema& schema) {
  const PredicateSite& site = p.sites.at(static_cast<std::size_t>(site_id));
  Patch out;
  out.site_id = site_id;
  out.dnf = d;
  Program work = p;
  if (!d.is_false()) {
    Expr guard = render_guard(d, site, schema);
    out.guard_expr = emit_expr(guard);
    detail::Splicer splicer(work, site, std::move(guard), d.is_true());
    out.temps = splicer.run();
    out.condition = splicer.condition();
  } else {
    out.guard_expr = "false";
    out.condition = site.clause;
  }
  out.source = emit_source(work);
  try {
    out.program = lower_predicates(parse_program(out.source));
  } catch (const SourceError& e) {
    throw SynthesisError(std::string("patched program does not compile: ") + e.what());
  }
  return out;
}

struct Fidelity {
  bool fidelity = false;
  bool all_pass = false;
  std::vector<bool> patched;  // verdicts of the patched program, suite order
  std::vector<bool> guided;   // verdicts of the classifier-guided runs
};

// Compares, test by test, the patched program against runs of the original
// program with the tree deciding negations.
inline Fidelity validate_patch(const Program& original, const Patch& patch, const DecisionTree& tree,
                               const TestSuite& training, std::int64_t budget = kDefaultStepBudget) {
  Fidelity f;
  f.fidelity = true;
  f.all_pass = true;
  Plausibility guided = is_plausible(original, patch.site_id, tree, training, budget);
  for (std::size_t i = 0; i < training.tests.size(); ++i) {
    bool ok = run(patch.program, training.tests[i], Controller::none(), budget).passed;
    f.patched.push_back(ok);
    f.guided.push_back(guided.runs[i].passed);
    f.fidelity = f.fidelity && ok == guided.runs[i].passed;
    f.all_pass = f.all_pass && ok;
  }
  return f;
}

enum class Verdict { CorrectCandidate, Overfit, Infeasible };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::CorrectCandidate: return "correct-candidate";
    case Verdict::Overfit: return "overfit";
    case Verdict::Infeasible: return "infeasible";
  }
  return "?";
}

struct ValidationResult {
  std::size_t pass = 0;
  std::size_t fail = 0;
  bool empty = false;  // vacuous: no validation tests
};

inline ValidationResult evaluate_on_validation(const Patch& patch, const TestSuite& validation,
                                               std::int64_t budget = kDefaultStepBudget) {
  ValidationResult r;
  r.empty = validation.tests.empty();
  for (const auto& t : validation.tests) (run(patch.program, t, Controller::none(), budget).passed ? r.pass : r.fail) += 1;
  return r;
}

inline Verdict patch_verdict(bool plausible, bool fidelity, const ValidationResult& v) {
  if (!plausible || !fidelity) return Verdict::Infeasible;
  return v.fail == 0 ? Verdict::CorrectCandidate : Verdict::Overfit;
}

inline std::string patch_diff(const Program& original, const Patch& patch, const std::string& name = "program.mimp") {
  return unified_diff(emit_source(original), patch.source, "a/" + name, "b/" + name);
}

}  // namespace flipguard
