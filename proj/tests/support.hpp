#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "flipguard/bench.hpp"

namespace fg_test {

using namespace flipguard;

inline std::filesystem::path corpus_dir() { return FLIPGUARD_CORPUS; }

inline Program lowered(std::string_view source) { return lower_predicates(parse_program(source)); }

inline TestSuite suite_of(std::string_view text, const Program& p) { return parse_test_suite(text, p); }

inline TestCase test_case(std::string name, std::vector<Value> args, std::string expected = "") {
  return {std::move(name), std::move(args), std::move(expected)};
}

inline std::vector<Defect> corpus() { return list_corpus(corpus_dir()); }

struct LoadedDefect {
  Defect defect;
  Program buggy;
  Program reference;
  TestSuite train;
};

inline LoadedDefect load_defect(const std::string& name) {
  LoadedDefect d;
  for (auto& c : corpus())
    if (c.name == name) d.defect = c;
  if (d.defect.name.empty()) throw std::runtime_error("no corpus defect " + name);
  d.buggy = load_program(d.defect.dir / "buggy.mimp");
  d.reference = load_program(d.defect.dir / "reference.mimp");
  d.train = load_suite(d.defect.dir / "train.tests", d.buggy);
  return d;
}

inline TestSuite validation_for(const LoadedDefect& d, std::size_t n, std::uint64_t seed = 7) {
  GenConfig g;
  g.n = n;
  g.seed = seed;
  g = gen_config_from_json(d.defect.meta.value("params", nlohmann::json::object()), g);
  return gen_validation(d.reference, g).suite;
}

inline int site_with_clause(const Program& p, const std::string& clause) {
  for (const auto& s : p.sites)
    if (s.clause == clause) return s.id;
  return -1;
}

// A second evaluator for MiniImp that never consults predicate sites, slots
// or controllers: variables live in name-keyed scopes. It serves as the
// oracle for the instrumented interpreter.
class ReferenceEvaluator {
 public:
  struct Outcome {
    std::string output;
    bool faulted = false;
  };

  explicit ReferenceEvaluator(const Program& p, std::int64_t budget = 1'000'000) : p_(p), budget_(budget) {}

  Outcome run(const std::vector<Value>& args) {
    Outcome out;
    try {
      for (const auto& g : p_.globals)
        globals_[g.decl.name] = g.decl.init ? std::optional<Value>(widen(eval(*g.decl.init), g.decl.type))
                                            : std::nullopt;
      call(p_.main(), args);
    } catch (const Fault&) {
      out.faulted = true;
    }
    out.output = output_;
    return out;
  }

 private:
  struct Fault {};
  using Scope = std::map<std::string, std::optional<Value>>;

  const Program& p_;
  std::int64_t budget_;
  std::int64_t steps_ = 0;
  int depth_ = 0;
  std::string output_;
  std::map<std::string, std::optional<Value>> globals_;
  std::vector<std::vector<Scope>> frames_;
  std::optional<Value> returned_;

  void step() {
    if (++steps_ > budget_) throw Fault{};
  }

  static Value widen(Value v, Type t) {
    if (t.base != BaseType::Float) return v;
    if (v.is_int()) return Value(static_cast<double>(v.as_int()));
    if (v.is_array()) {
      ArrayValue items = v.as_array();
      for (auto& e : items)
        if (e.is_int()) e = Value(static_cast<double>(e.as_int()));
      return Value(std::move(items));
    }
    return v;
  }

  std::optional<Value>* lookup(const std::string& name) {
    auto& scopes = frames_.back();
    for (auto it = scopes.rbegin(); it != scopes.rend(); ++it) {
      auto f = it->find(name);
      if (f != it->end()) return &f->second;
    }
    auto g = globals_.find(name);
    return g == globals_.end() ? nullptr : &g->second;
  }

  Value call(const Function& f, const std::vector<Value>& args) {
    if (++depth_ > 2000) throw Fault{};
    frames_.push_back({Scope{}});
    for (std::size_t i = 0; i < args.size(); ++i) frames_.back().back()[f.params[i].name] = widen(args[i], f.params[i].type);
    returned_.reset();
    bool done = block(f.body);
    std::optional<Value> r = std::move(returned_);
    returned_.reset();
    frames_.pop_back();
    --depth_;
    if (f.return_type.is(BaseType::Void)) return Value(false);
    if (!done || !r) throw Fault{};
    return widen(*r, f.return_type);
  }

  // True when a return statement ran.
  bool block(const Block& b) {
    frames_.back().push_back({});
    bool done = false;
    for (const auto& s : b.stmts)
      if ((done = stmt(s))) break;
    frames_.back().pop_back();
    return done;
  }

  bool stmt(const Stmt& s) {
    step();
    if (auto d = s.as<DeclStmt>()) {
      std::optional<Value> v;
      if (d->init) v = widen(eval(*d->init), d->type);
      frames_.back().back()[d->name] = v;
    } else if (auto a = s.as<AssignStmt>()) {
      if (auto v = a->target.as<VarExpr>()) {
        Value value = widen(eval(a->value), a->target.type);
        *lookup(v->name) = std::move(value);
      } else {
        const auto& ix = *a->target.as<IndexExpr>();
        std::int64_t k = eval(*ix.index).as_int();
        Value value = widen(eval(a->value), a->target.type);
        auto* holder = lookup(ix.base->as<VarExpr>()->name);
        if (!holder || !*holder) throw Fault{};
        auto& items = (*holder)->as_array();
        if (k < 0 || k >= static_cast<std::int64_t>(items.size())) throw Fault{};
        items[static_cast<std::size_t>(k)] = std::move(value);
      }
    } else if (auto i = s.as<IfStmt>()) {
      if (eval(i->cond).as_bool()) return block(i->then_block);
      if (i->else_block) return block(*i->else_block);
    } else if (auto w = s.as<WhileStmt>()) {
      while (eval(w->cond).as_bool()) {
        if (block(w->body)) return true;
        step();
      }
    } else if (auto r = s.as<ReturnStmt>()) {
      if (r->value) returned_ = eval(*r->value);
      return true;
    } else if (auto pr = s.as<PrintStmt>()) {
      output_ += display(eval(pr->value)) + "\n";
    } else {
      eval(s.as<ExprStmt>()->expr);
    }
    return false;
  }

  static std::int64_t integral(const Value& v) { return v.is_char() ? static_cast<std::int64_t>(v.as_char()) : v.as_int(); }

  static double real(const Value& v) { return v.is_float() ? v.as_float() : static_cast<double>(integral(v)); }

  Value eval(const Expr& e) {
    if (auto l = e.as<LiteralExpr>()) return l->value;
    if (auto v = e.as<VarExpr>()) {
      auto* slot = lookup(v->name);
      if (!slot || !*slot) throw Fault{};
      return **slot;
    }
    if (auto ix = e.as<IndexExpr>()) {
      Value base = eval(*ix->base);
      std::int64_t k = eval(*ix->index).as_int();
      if (base.is_string()) {
        if (k < 0 || k >= static_cast<std::int64_t>(base.as_string().size())) throw Fault{};
        return Value(base.as_string()[static_cast<std::size_t>(k)]);
      }
      if (k < 0 || k >= static_cast<std::int64_t>(base.as_array().size())) throw Fault{};
      return base.as_array()[static_cast<std::size_t>(k)];
    }
    if (auto c = e.as<CallExpr>()) {
      std::vector<Value> args;
      for (const auto& a : c->args) args.push_back(eval(a));
      if (c->callee == "len")
        return Value(static_cast<std::int64_t>(args[0].is_string() ? args[0].as_string().size() : args[0].as_array().size()));
      if (c->callee == "hash") return Value(static_cast<std::int64_t>(value_hash(args[0])));
      if (c->callee == "to_float") return Value(real(args[0]));
      if (c->callee == "to_int") return args[0].is_float() ? Value(static_cast<std::int64_t>(args[0].as_float())) : Value(integral(args[0]));
      if (c->callee == "to_char") return Value(static_cast<char32_t>(integral(args[0])));
      step();
      return call(p_.functions[static_cast<std::size_t>(p_.find_function(c->callee))], args);
    }
    if (auto u = e.as<UnaryExpr>()) {
      Value v = eval(*u->operand);
      if (u->op == UnOp::Not) return Value(!v.as_bool());
      if (v.is_float()) return Value(-v.as_float());
      return Value(static_cast<std::int64_t>(0 - static_cast<std::uint64_t>(integral(v))));
    }
    if (auto a = e.as<ArrayExpr>()) {
      ArrayValue items;
      for (const auto& item : a->items) items.push_back(widen(eval(item), e.type.element()));
      return Value(std::move(items));
    }
    if (auto n = e.as<NewArrayExpr>()) {
      std::int64_t size = eval(*n->size).as_int();
      if (size < 0 || size > budget_) throw Fault{};
      steps_ += size;
      return Value(ArrayValue(static_cast<std::size_t>(size), default_value(e.type.element())));
    }
    const auto& b = *e.as<BinaryExpr>();
    if (b.op == BinOp::And) return Value(eval(*b.lhs).as_bool() && eval(*b.rhs).as_bool());
    if (b.op == BinOp::Or) return Value(eval(*b.lhs).as_bool() || eval(*b.rhs).as_bool());
    Value l = eval(*b.lhs);
    Value r = eval(*b.rhs);
    if (b.op == BinOp::Xor) return Value(l.as_bool() != r.as_bool());
    if (is_comparison(b.op)) {
      int c;
      if (l.is_string()) c = l.as_string().compare(r.as_string());
      else if (l.is_bool()) c = static_cast<int>(l.as_bool()) - static_cast<int>(r.as_bool());
      else if (l.is_float() || r.is_float()) c = real(l) < real(r) ? -1 : (real(l) > real(r) ? 1 : 0);
      else c = integral(l) < integral(r) ? -1 : (integral(l) > integral(r) ? 1 : 0);
      bool unordered = (l.is_float() || r.is_float()) && (real(l) != real(l) || real(r) != real(r));
      switch (b.op) {
        case BinOp::Eq: return Value(!unordered && c == 0);
        case BinOp::Ne: return Value(unordered || c != 0);
        case BinOp::Lt: return Value(!unordered && c < 0);
        case BinOp::Le: return Value(!unordered && c <= 0);
        case BinOp::Gt: return Value(!unordered && c > 0);
        default: return Value(!unordered && c >= 0);
      }
    }
    if (e.type.is(BaseType::String)) return Value(from_utf8(display(l) + display(r)));
    if (e.type.is(BaseType::Float)) {
      double x = real(l), y = real(r);
      switch (b.op) {
        case BinOp::Add: return Value(x + y);
        case BinOp::Sub: return Value(x - y);
        case BinOp::Mul: return Value(x * y);
        default: return Value(x / y);
      }
    }
    auto x = static_cast<std::uint64_t>(integral(l)), y = static_cast<std::uint64_t>(integral(r));
    switch (b.op) {
      case BinOp::Add: return Value(static_cast<std::int64_t>(x + y));
      case BinOp::Sub: return Value(static_cast<std::int64_t>(x - y));
      case BinOp::Mul: return Value(static_cast<std::int64_t>(x * y));
      default: break;
    }
    auto sx = static_cast<std::int64_t>(x), sy = static_cast<std::int64_t>(y);
    if (sy == 0) throw Fault{};
    if (sy == -1) return Value(b.op == BinOp::Div ? static_cast<std::int64_t>(0 - x) : std::int64_t{0});
    return Value(b.op == BinOp::Div ? sx / sy : sx % sy);
  }
};

// Evaluates the unlowered form of `p`, so hoisted call temporaries play no
// part in the oracle.
inline ReferenceEvaluator::Outcome reference_run(const Program& p, const TestCase& t) {
  Program raw = parse_program(emit_source(p));
  return ReferenceEvaluator(raw).run(t.args);
}

}  // namespace fg_test
