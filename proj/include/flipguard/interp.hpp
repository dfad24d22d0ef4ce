#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "flipguard/ast.hpp"
#include "flipguard/test_suite.hpp"

namespace flipguard {

inline constexpr std::int64_t kDefaultStepBudget = 1'000'000;
inline constexpr int kMaxCallDepth = 2000;

// Values captured at one execution of a predicate site, before the clause is
// evaluated. An absent value is a local not yet initialized (or an element
// read that would fault).
struct StateSnapshot {
  int site_id = -1;
  std::string test;
  std::int64_t instance = 0;
  std::vector<std::pair<std::string, std::optional<Value>>> bindings;
};

// Which executions of the controlled site are negated. A rule is applied to
// each 1-based instance index as it happens; an explicit set names them.
struct InstanceSet {
  enum class Rule { Explicit, All, FromSecond, Odd, Even };
  Rule rule = Rule::Explicit;
  std::set<std::int64_t> indices;

  static InstanceSet of(std::set<std::int64_t> s) { return {Rule::Explicit, std::move(s)}; }
  static InstanceSet rule_of(Rule r) { return {r, {}}; }

  bool contains(std::int64_t i) const {
    switch (rule) {
      case Rule::Explicit: return indices.count(i) > 0;
      case Rule::All: return true;
      case Rule::FromSecond: return i >= 2;
      case Rule::Odd: return i % 2 == 1;
      case Rule::Even: return i % 2 == 0;
    }
    return false;
  }
};

struct Controller {
  enum class Mode { None, Pattern, Classifier };
  Mode mode = Mode::None;
  int site = -1;
  InstanceSet instances;
  std::function<bool(const StateSnapshot&)> decide;  // classifier mode: true = negate
  bool capture = false;                               // record snapshots of `site`
  // Bindings `decide` consults; others are left absent when not capturing.
  // Empty means all.
  std::vector<bool> reads;

  static Controller none() { return {}; }
  static Controller observe(int site) {
    Controller c;
    c.site = site;
    c.capture = true;
    return c;
  }
  static Controller pattern(int site, InstanceSet s, bool capture = false) {
    Controller c;
    c.mode = Mode::Pattern;
    c.site = site;
    c.instances = std::move(s);
    c.capture = capture;
    return c;
  }
  static Controller classifier(int site, std::function<bool(const StateSnapshot&)> decide, bool capture = false) {
    Controller c;
    c.mode = Mode::Classifier;
    c.site = site;
    c.decide = std::move(decide);
    c.capture = capture;
    return c;
  }
};

enum class AbortReason { None, StepBudget, RuntimeError };

inline const char* to_string(AbortReason r) {
  switch (r) {
    case AbortReason::None: return "none";
    case AbortReason::StepBudget: return "step_budget";
    case AbortReason::RuntimeError: return "runtime_error";
  }
  return "?";
}

struct RunResult {
  bool passed = false;
  std::string output;
  std::vector<std::int64_t> site_counts;  // indexed by site id
  std::vector<StateSnapshot> snapshots;
  std::vector<std::int64_t> negations_fired;
  AbortReason abort_reason = AbortReason::None;
  std::string error;

  friend bool operator==(const RunResult& a, const RunResult& b) {
    if (a.snapshots.size() != b.snapshots.size()) return false;
    for (std::size_t i = 0; i < a.snapshots.size(); ++i) {
      const auto& x = a.snapshots[i];
      const auto& y = b.snapshots[i];
      if (x.site_id != y.site_id || x.test != y.test || x.instance != y.instance || x.bindings != y.bindings)
        return false;
    }
    return a.passed == b.passed && a.output == b.output && a.site_counts == b.site_counts &&
           a.negations_fired == b.negations_fired && a.abort_reason == b.abort_reason && a.error == b.error;
  }
};

namespace detail {

struct Fault {
  AbortReason reason;
  std::string message;
};

class Machine {
 public:
  Machine(const Program& p, const Controller& c, std::int64_t budget, std::string test_name)
      : p_(p), c_(c), budget_(budget), test_(std::move(test_name)) {
    result_.site_counts.assign(p.sites.size(), 0);
  }

  RunResult run(const std::vector<Value>& args) {
    try {
      globals_.assign(p_.globals.size(), std::nullopt);
      for (std::size_t i = 0; i < p_.globals.size(); ++i) {
        const auto& d = p_.globals[i].decl;
        globals_[i] = d.init ? coerce(eval(*d.init), d.type) : default_value(d.type);
      }
      call(p_.main(), args);
    } catch (const Fault& f) {
      result_.abort_reason = f.reason;
      result_.error = f.message;
    }
    return std::move(result_);
  }

 private:
  using Frame = std::vector<std::optional<Value>>;
  enum class Flow { Normal, Return };

  const Program& p_;
  const Controller& c_;
  std::int64_t budget_;
  std::string test_;
  std::int64_t steps_ = 0;
  int depth_ = 0;
  std::vector<std::optional<Value>> globals_;
  const Function* fn_ = nullptr;
  Frame* frame_ = nullptr;
  std::optional<Value> ret_;
  RunResult result_;

  [[noreturn]] static void error(SourceLoc loc, const std::string& msg) {
    throw Fault{AbortReason::RuntimeError, std::to_string(loc.line) + ":" + std::to_string(loc.column) + ": " + msg};
  }

  void tick() {
    if (++steps_ > budget_) throw Fault{AbortReason::StepBudget, "step budget exhausted"};
  }

  static Value coerce(Value v, Type t) {
    if (t.is(BaseType::Float) && v.is_int()) return Value(static_cast<double>(v.as_int()));
    if (t.array && t.base == BaseType::Float && v.is_array()) {
      for (auto& e : v.as_array())
        if (e.is_int()) e = Value(static_cast<double>(e.as_int()));
    }
    return v;
  }

  std::optional<Value>& slot(Slot s) {
    if (s.scope == Scope::Global) return globals_[static_cast<std::size_t>(s.index)];
    return (*frame_)[static_cast<std::size_t>(s.index)];
  }

  Value call(const Function& f, std::vector<Value> args) {
    if (++depth_ > kMaxCallDepth) error(f.loc, "call depth limit exceeded in '" + f.name + "'");
    Frame frame(f.slot_names.size());
    for (std::size_t i = 0; i < args.size(); ++i) frame[i] = coerce(std::move(args[i]), f.params[i].type);
    const Function* saved_fn = fn_;
    Frame* saved_frame = frame_;
    fn_ = &f;
    frame_ = &frame;
    ret_.reset();
    Flow flow = exec_block(f.body);
    std::optional<Value> out = std::move(ret_);
    ret_.reset();
    fn_ = saved_fn;
    frame_ = saved_frame;
    --depth_;
    if (f.return_type.is(BaseType::Void)) return Value(false);
    if (flow != Flow::Return || !out) error(f.loc, "function '" + f.name + "' ended without returning a value");
    return coerce(std::move(*out), f.return_type);
  }

  Flow exec_block(const Block& b) {
    Flow flow = Flow::Normal;
    for (const auto& s : b.stmts) {
      flow = exec(s);
      if (flow == Flow::Return) break;
    }
    for (int slot : b.scope_slots) (*frame_)[static_cast<std::size_t>(slot)].reset();
    return flow;
  }

  bool condition(const Expr& e) { return eval(e).as_bool(); }

  Flow exec(const Stmt& s) {
    tick();
    if (auto d = s.as<DeclStmt>()) {
      auto& target = (*frame_)[static_cast<std::size_t>(d->slot)];
      if (d->init) target = coerce(eval(*d->init), d->type);
      else target.reset();
    } else if (auto a = s.as<AssignStmt>()) {
      assign(*a);
    } else if (auto i = s.as<IfStmt>()) {
      if (condition(i->cond)) return exec_block(i->then_block);
      if (i->else_block) return exec_block(*i->else_block);
    } else if (auto w = s.as<WhileStmt>()) {
      while (condition(w->cond)) {
        if (exec_block(w->body) == Flow::Return) return Flow::Return;
        tick();
      }
    } else if (auto r = s.as<ReturnStmt>()) {
      if (r->value) ret_ = eval(*r->value);
      return Flow::Return;
    } else if (auto pr = s.as<PrintStmt>()) {
      append_display(result_.output, eval(pr->value));
      result_.output += '\n';
    } else if (auto es = s.as<ExprStmt>()) {
      eval(es->expr);
    }
    return Flow::Normal;
  }

  void assign(const AssignStmt& a) {
    if (auto v = a.target.as<VarExpr>()) {
      if (append_in_place(*v, a)) return;
      slot(v->slot) = coerce(eval(a.value), a.target.type);
      return;
    }
    const auto& ix = *a.target.as<IndexExpr>();
    Value index = eval(*ix.index);
    Value value = coerce(eval(a.value), a.target.type);
    auto& holder = slot(ix.base->as<VarExpr>()->slot);
    if (!holder) error(a.target.loc, "read of uninitialized variable '" + ix.base->as<VarExpr>()->name + "'");
    auto& items = holder->as_array();
    std::int64_t k = index.as_int();
    if (k < 0 || k >= static_cast<std::int64_t>(items.size()))
      error(a.target.loc, "index " + std::to_string(k) + " out of bounds for length " + std::to_string(items.size()));
    items[static_cast<std::size_t>(k)] = std::move(value);
  }

  // `s = s + e1 + ... + en` on a local string appends without copying `s`.
  // Only locals qualify: evaluating the operands cannot write a local of the
  // current frame.
  bool append_in_place(const VarExpr& v, const AssignStmt& a) {
    if (v.slot.scope != Scope::Local || !a.target.type.is(BaseType::String)) return false;
    std::vector<const Expr*> operands;
    const Expr* e = &a.value;
    while (auto b = e->as<BinaryExpr>()) {
      if (b->op != BinOp::Add || b->site >= 0 || !e->type.is(BaseType::String)) return false;
      operands.push_back(b->rhs.get());
      e = b->lhs.get();
    }
    auto lhs = e->as<VarExpr>();
    if (operands.empty() || !lhs || lhs->slot.scope != Scope::Local || lhs->slot.index != v.slot.index) return false;
    if (!slot(v.slot)) error(e->loc, "read of uninitialized variable '" + lhs->name + "'");
    for (auto it = operands.rbegin(); it != operands.rend(); ++it) {
      Value r = eval(**it);
      append_text(slot(v.slot)->as_string(), r);
    }
    return true;
  }

  Value read(const VarExpr& v, SourceLoc loc) {
    auto& s = slot(v.slot);
    if (!s) error(loc, "read of uninitialized variable '" + v.name + "'");
    return *s;
  }

  Value index(const Value& base, std::int64_t k, SourceLoc loc) {
    std::size_t n = base.is_string() ? base.as_string().size() : base.as_array().size();
    if (k < 0 || k >= static_cast<std::int64_t>(n))
      error(loc, "index " + std::to_string(k) + " out of bounds for length " + std::to_string(n));
    if (base.is_string()) return Value(base.as_string()[static_cast<std::size_t>(k)]);
    return base.as_array()[static_cast<std::size_t>(k)];
  }

  Value eval(const Expr& e) {
    if (auto lit = e.as<LiteralExpr>()) return lit->value;
    if (auto v = e.as<VarExpr>()) return read(*v, e.loc);
    if (auto ix = e.as<IndexExpr>()) {
      Value base = eval(*ix->base);
      return index(base, eval(*ix->index).as_int(), e.loc);
    }
    if (auto c = e.as<CallExpr>()) return eval_call(e, *c);
    if (auto u = e.as<UnaryExpr>()) {
      Value v = eval(*u->operand);
      if (u->op == UnOp::Not) return Value(!v.as_bool());
      if (v.is_float()) return Value(-v.as_float());
      std::int64_t x = v.is_char() ? static_cast<std::int64_t>(v.as_char()) : v.as_int();
      return Value(static_cast<std::int64_t>(0 - static_cast<std::uint64_t>(x)));
    }
    if (auto b = e.as<BinaryExpr>()) {
      if (b->site >= 0) return Value(eval_site(e, *b));
      return eval_binary(e, *b);
    }
    if (auto a = e.as<ArrayExpr>()) {
      ArrayValue items;
      items.reserve(a->items.size());
      for (const auto& item : a->items) items.push_back(coerce(eval(item), e.type.element()));
      return Value(std::move(items));
    }
    const auto& na = *e.as<NewArrayExpr>();
    std::int64_t n = eval(*na.size).as_int();
    if (n < 0) error(e.loc, "negative array size " + std::to_string(n));
    if (n > budget_) throw Fault{AbortReason::StepBudget, "array allocation exceeds step budget"};
    steps_ += n;
    return Value(ArrayValue(static_cast<std::size_t>(n), default_value(e.type.element())));
  }

  Value eval_call(const Expr& e, const CallExpr& c) {
    std::vector<Value> args;
    args.reserve(c.args.size());
    for (const auto& a : c.args) args.push_back(eval(a));
    switch (c.intrinsic) {
      case Intrinsic::None: break;
      case Intrinsic::Hash: return Value(static_cast<std::int64_t>(value_hash(args[0])));
      case Intrinsic::Len:
        return Value(static_cast<std::int64_t>(args[0].is_string() ? args[0].as_string().size()
                                                                   : args[0].as_array().size()));
      case Intrinsic::ToInt: {
        const Value& v = args[0];
        if (v.is_int()) return v;
        if (v.is_char()) return Value(static_cast<std::int64_t>(v.as_char()));
        double d = v.as_float();
        if (!(d > -9.3e18 && d < 9.3e18)) error(e.loc, "to_int() of " + format_float(d) + " is out of range");
        return Value(static_cast<std::int64_t>(d));
      }
      case Intrinsic::ToFloat: return Value(args[0].numeric());
      case Intrinsic::ToChar: {
        if (args[0].is_char()) return args[0];
        std::int64_t k = args[0].as_int();
        if (k < 0 || k > 0x10FFFF) error(e.loc, "to_char() of " + std::to_string(k) + " is not a code point");
        return Value(static_cast<char32_t>(k));
      }
    }
    tick();
    return call(p_.functions[static_cast<std::size_t>(c.function)], std::move(args));
  }

  static bool compare(BinOp op, const Value& l, const Value& r) {
    auto order = [op](auto a, auto b) {
      switch (op) {
        case BinOp::Eq: return a == b;
        case BinOp::Ne: return a != b;
        case BinOp::Lt: return a < b;
        case BinOp::Le: return a <= b;
        case BinOp::Gt: return a > b;
        case BinOp::Ge: return a >= b;
        default: return false;
      }
    };
    if (l.is_string()) return order(l.as_string(), r.as_string());
    if (l.is_bool()) return order(l.as_bool(), r.as_bool());
    if (l.is_float() || r.is_float()) return order(l.numeric(), r.numeric());
    auto integral = [](const Value& v) { return v.is_char() ? static_cast<std::int64_t>(v.as_char()) : v.as_int(); };
    return order(integral(l), integral(r));
  }

  Value eval_binary(const Expr& e, const BinaryExpr& b) {
    switch (b.op) {
      case BinOp::And: return Value(eval(*b.lhs).as_bool() && eval(*b.rhs).as_bool());
      case BinOp::Or: return Value(eval(*b.lhs).as_bool() || eval(*b.rhs).as_bool());
      case BinOp::Xor: {
        bool l = eval(*b.lhs).as_bool();
        return Value(l != eval(*b.rhs).as_bool());
      }
      default: break;
    }
    Value l = eval(*b.lhs);
    Value r = eval(*b.rhs);
    if (is_comparison(b.op)) return Value(compare(b.op, l, r));
    if (e.type.is(BaseType::String)) {
      std::u32string text;
      append_text(text, l);
      append_text(text, r);
      return Value(std::move(text));
    }
    if (e.type.is(BaseType::Float)) {
      double x = l.numeric(), y = r.numeric();
      switch (b.op) {
        case BinOp::Add: return Value(x + y);
        case BinOp::Sub: return Value(x - y);
        case BinOp::Mul: return Value(x * y);
        default: return Value(x / y);
      }
    }
    auto integral = [](const Value& v) {
      return static_cast<std::uint64_t>(v.is_char() ? static_cast<std::int64_t>(v.as_char()) : v.as_int());
    };
    std::uint64_t x = integral(l), y = integral(r);
    switch (b.op) {
      case BinOp::Add: return Value(static_cast<std::int64_t>(x + y));
      case BinOp::Sub: return Value(static_cast<std::int64_t>(x - y));
      case BinOp::Mul: return Value(static_cast<std::int64_t>(x * y));
      default: break;
    }
    auto sx = static_cast<std::int64_t>(x), sy = static_cast<std::int64_t>(y);
    if (sy == 0) error(e.loc, b.op == BinOp::Div ? "division by zero" : "modulo by zero");
    if (sy == -1) return Value(b.op == BinOp::Div ? static_cast<std::int64_t>(0 - x) : std::int64_t{0});
    return Value(b.op == BinOp::Div ? sx / sy : sx % sy);
  }

  // Element captures re-evaluate a pure expression; a fault there is
  // recorded as absent rather than aborting the run.
  std::optional<Value> peek(const Binding& b) {
    if (b.kind == Binding::Kind::Variable) return slot(b.slot);
    std::int64_t saved = steps_;
    try {
      Value v = eval(b.expr);
      steps_ = saved;
      return v;
    } catch (const Fault&) {
      steps_ = saved;
      return std::nullopt;
    }
  }

  StateSnapshot snapshot(const PredicateSite& site, std::int64_t instance) {
    StateSnapshot s;
    s.site_id = site.id;
    s.test = test_;
    s.instance = instance;
    s.bindings.reserve(site.captures.size());
    for (std::size_t i = 0; i < site.captures.size(); ++i) {
      const Binding& b = site.captures[i];
      bool skip = !c_.capture && i < c_.reads.size() && !c_.reads[i];
      s.bindings.emplace_back(b.name, skip ? std::nullopt : peek(b));
    }
    return s;
  }

  bool eval_site(const Expr& e, const BinaryExpr& b) {
    for (const auto& h : b.hoisted) (*frame_)[static_cast<std::size_t>(h.slot)] = eval(*h.call);
    std::int64_t instance = ++result_.site_counts[static_cast<std::size_t>(b.site)];
    bool outcome = eval_binary(e, b).as_bool();
    if (b.site != c_.site) return outcome;

    bool negate = false;
    if (c_.mode == Controller::Mode::Classifier || c_.capture) {
      StateSnapshot snap = snapshot(p_.sites[static_cast<std::size_t>(b.site)], instance);
      if (c_.mode == Controller::Mode::Classifier) negate = c_.decide(snap);
      if (c_.capture) result_.snapshots.push_back(std::move(snap));
    }
    if (c_.mode == Controller::Mode::Pattern) negate = c_.instances.contains(instance);
    if (negate) result_.negations_fired.push_back(instance);
    return outcome != negate;
  }
};

}  // namespace detail

// Runs `main` on the test's arguments. Never throws for program faults: they
// end the run with a failing verdict and `abort_reason` set.
inline RunResult run(const Program& p, const TestCase& t, const Controller& c = {},
                     std::int64_t step_budget = kDefaultStepBudget) {
  RunResult r = detail::Machine(p, c, step_budget, t.name).run(t.args);
  r.passed = r.abort_reason == AbortReason::None && output_matches(r.output, t.expected_output);
  return r;
}

inline std::vector<std::int64_t> count_executions(const Program& p, const TestCase& t,
                                                  std::int64_t step_budget = kDefaultStepBudget) {
  return run(p, t, Controller::none(), step_budget).site_counts;
}

}  // namespace flipguard
