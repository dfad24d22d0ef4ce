#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "flipguard/ast.hpp"
#include "flipguard/parser.hpp"

namespace flipguard {

inline Intrinsic intrinsic_named(std::string_view name) {
  if (name == "hash") return Intrinsic::Hash;
  if (name == "len") return Intrinsic::Len;
  if (name == "to_int") return Intrinsic::ToInt;
  if (name == "to_float") return Intrinsic::ToFloat;
  if (name == "to_char") return Intrinsic::ToChar;
  return Intrinsic::None;
}

// int widens to float on assignment, argument passing and return.
inline bool assignable(Type to, Type from) {
  return to == from || (to.is(BaseType::Float) && from.is(BaseType::Int));
}

// Binds every name to a slot and assigns a type to every expression.
// Local names are unique per function and never shadow globals, so a name
// identifies one variable within a function.
class Resolver {
 public:
  explicit Resolver(Program& p) : p_(p) {}

  void run() {
    std::set<std::string> fn_names;
    for (auto& f : p_.functions) {
      if (intrinsic_named(f.name) != Intrinsic::None) fail(f.loc, "'" + f.name + "' is a reserved intrinsic name");
      if (!fn_names.insert(f.name).second) fail(f.loc, "duplicate function '" + f.name + "'");
    }
    p_.entry = p_.find_function("main");
    if (p_.entry < 0) fail({1, 1}, "missing function 'main'");

    for (std::size_t i = 0; i < p_.globals.size(); ++i) {
      auto& g = p_.globals[i];
      if (globals_.count(g.decl.name) || fn_names.count(g.decl.name))
        fail(g.loc, "redeclaration of '" + g.decl.name + "'");
      fn_ = nullptr;
      if (g.decl.init) {
        Type t = check(*g.decl.init);
        if (!assignable(g.decl.type, t)) mismatch(g.decl.init->loc, g.decl.type, t);
      }
      g.decl.slot = static_cast<int>(i);
      globals_[g.decl.name] = static_cast<int>(i);
    }

    for (auto& f : p_.functions) resolve_function(f);
  }

 private:
  Program& p_;
  std::map<std::string, int> globals_;
  Function* fn_ = nullptr;
  std::vector<std::map<std::string, int>> scopes_;
  std::set<std::string> fn_declared_;

  [[noreturn]] static void fail(SourceLoc loc, const std::string& msg) { throw SourceError(loc, msg); }
  [[noreturn]] static void mismatch(SourceLoc loc, Type want, Type got) {
    fail(loc, "type mismatch: expected " + to_string(want) + ", got " + to_string(got));
  }

  int add_slot(const std::string& name, Type t) {
    fn_->slot_names.push_back(name);
    fn_->slot_types.push_back(t);
    return static_cast<int>(fn_->slot_names.size()) - 1;
  }

  void declare(SourceLoc loc, const std::string& name) {
    if (globals_.count(name) || !fn_declared_.insert(name).second)
      fail(loc, "redeclaration of '" + name + "'");
  }

  void resolve_function(Function& f) {
    fn_ = &f;
    f.slot_names.clear();
    f.slot_types.clear();
    scopes_.assign(1, {});
    fn_declared_.clear();
    for (auto& param : f.params) {
      declare(param.loc, param.name);
      scopes_.back()[param.name] = add_slot(param.name, param.type);
    }
    resolve_block(f.body);
    scopes_.clear();
    fn_ = nullptr;
  }

  void resolve_block(Block& b) {
    scopes_.emplace_back();
    b.scope_slots.clear();
    for (auto& s : b.stmts) resolve_stmt(s, b);
    scopes_.pop_back();
  }

  void resolve_stmt(Stmt& s, Block& owner) {
    if (auto d = s.as<DeclStmt>()) {
      if (d->init) {
        Type t = check(*d->init);
        if (!assignable(d->type, t)) mismatch(d->init->loc, d->type, t);
      }
      declare(s.loc, d->name);
      d->slot = add_slot(d->name, d->type);
      scopes_.back()[d->name] = d->slot;
      owner.scope_slots.push_back(d->slot);
    } else if (auto a = s.as<AssignStmt>()) {
      Type tt = check(a->target);
      if (auto ix = a->target.as<IndexExpr>(); ix && ix->base->type.is(BaseType::String))
        fail(a->target.loc, "strings are immutable");
      Type vt = check(a->value);
      if (!assignable(tt, vt)) mismatch(a->value.loc, tt, vt);
    } else if (auto i = s.as<IfStmt>()) {
      require_bool(i->cond);
      resolve_block(i->then_block);
      if (i->else_block) resolve_block(*i->else_block);
    } else if (auto w = s.as<WhileStmt>()) {
      require_bool(w->cond);
      resolve_block(w->body);
    } else if (auto r = s.as<ReturnStmt>()) {
      if (fn_->return_type.is(BaseType::Void)) {
        if (r->value) fail(s.loc, "void function '" + fn_->name + "' cannot return a value");
      } else {
        if (!r->value) fail(s.loc, "missing return value in '" + fn_->name + "'");
        Type t = check(*r->value);
        if (!assignable(fn_->return_type, t)) mismatch(r->value->loc, fn_->return_type, t);
      }
    } else if (auto pr = s.as<PrintStmt>()) {
      require_value(pr->value, check(pr->value));
    } else if (auto es = s.as<ExprStmt>()) {
      check(es->expr);
    }
  }

  void require_bool(Expr& e) {
    Type t = check(e);
    if (!t.is(BaseType::Bool)) mismatch(e.loc, Type::of(BaseType::Bool), t);
  }

  static void require_value(const Expr& e, Type t) {
    if (t.is(BaseType::Void)) fail(e.loc, "void value used in expression");
  }

  Slot lookup(const std::string& name) const {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
      auto f = it->find(name);
      if (f != it->end()) return {Scope::Local, f->second};
    }
    auto g = globals_.find(name);
    if (g != globals_.end()) return {Scope::Global, g->second};
    return {};
  }

  Type slot_type(Slot s) const {
    if (s.scope == Scope::Global) return p_.globals[static_cast<std::size_t>(s.index)].decl.type;
    return fn_->slot_types[static_cast<std::size_t>(s.index)];
  }

  Type check(Expr& e) {
    e.type = check_node(e);
    return e.type;
  }

  Type check_node(Expr& e) {
    if (auto lit = e.as<LiteralExpr>()) {
      const Value& v = lit->value;
      if (v.is_int()) return Type::of(BaseType::Int);
      if (v.is_float()) return Type::of(BaseType::Float);
      if (v.is_char()) return Type::of(BaseType::Char);
      if (v.is_string()) return Type::of(BaseType::String);
      return Type::of(BaseType::Bool);
    }
    if (auto var = e.as<VarExpr>()) {
      var->slot = lookup(var->name);
      if (var->slot.scope == Scope::Unresolved) fail(e.loc, "unresolved identifier '" + var->name + "'");
      return slot_type(var->slot);
    }
    if (auto ix = e.as<IndexExpr>()) {
      Type bt = check(*ix->base);
      Type it = check(*ix->index);
      if (!it.is(BaseType::Int)) mismatch(ix->index->loc, Type::of(BaseType::Int), it);
      if (bt.is(BaseType::String)) return Type::of(BaseType::Char);
      if (!bt.array) fail(e.loc, "cannot index a value of type " + to_string(bt));
      return bt.element();
    }
    if (auto call = e.as<CallExpr>()) return check_call(e, *call);
    if (auto un = e.as<UnaryExpr>()) {
      Type t = check(*un->operand);
      if (un->op == UnOp::Not) {
        if (!t.is(BaseType::Bool)) mismatch(un->operand->loc, Type::of(BaseType::Bool), t);
        return t;
      }
      if (!t.is_numeric()) fail(e.loc, "unary '-' needs a number, got " + to_string(t));
      return t.is(BaseType::Float) ? t : Type::of(BaseType::Int);
    }
    if (auto bin = e.as<BinaryExpr>()) return check_binary(e, *bin);
    if (auto arr = e.as<ArrayExpr>()) {
      Type elem;
      for (std::size_t i = 0; i < arr->items.size(); ++i) {
        Type t = check(arr->items[i]);
        require_value(arr->items[i], t);
        if (t.array) fail(arr->items[i].loc, "nested arrays are not supported");
        if (i == 0) {
          elem = t;
        } else if (t != elem) {
          bool numeric_mix = (t.is(BaseType::Float) && elem.is(BaseType::Int)) ||
                             (t.is(BaseType::Int) && elem.is(BaseType::Float));
          if (!numeric_mix) mismatch(arr->items[i].loc, elem, t);
          elem = Type::of(BaseType::Float);
        }
      }
      return Type::array_of(elem.base);
    }
    auto na = e.as<NewArrayExpr>();
    Type st = check(*na->size);
    if (!st.is(BaseType::Int)) mismatch(na->size->loc, Type::of(BaseType::Int), st);
    return Type::array_of(na->element);
  }

  Type check_call(Expr& e, CallExpr& call) {
    call.intrinsic = intrinsic_named(call.callee);
    std::vector<Type> args;
    for (auto& a : call.args) {
      args.push_back(check(a));
      require_value(a, args.back());
    }
    if (call.intrinsic != Intrinsic::None) {
      if (args.size() != 1) fail(e.loc, "'" + call.callee + "' takes exactly one argument");
      Type t = args[0];
      switch (call.intrinsic) {
        case Intrinsic::Hash: return Type::of(BaseType::Int);
        case Intrinsic::Len:
          if (!t.array && !t.is(BaseType::String)) fail(e.loc, "len() needs a string or array");
          return Type::of(BaseType::Int);
        case Intrinsic::ToInt:
          if (!t.is_numeric()) fail(e.loc, "to_int() needs a number");
          return Type::of(BaseType::Int);
        case Intrinsic::ToFloat:
          if (!t.is_numeric()) fail(e.loc, "to_float() needs a number");
          return Type::of(BaseType::Float);
        case Intrinsic::ToChar:
          if (!t.is(BaseType::Int) && !t.is(BaseType::Char)) fail(e.loc, "to_char() needs an int");
          return Type::of(BaseType::Char);
        case Intrinsic::None: break;
      }
    }
    call.function = p_.find_function(call.callee);
    if (call.function < 0) fail(e.loc, "call to undefined function '" + call.callee + "'");
    const Function& f = p_.functions[static_cast<std::size_t>(call.function)];
    if (f.params.size() != args.size())
      fail(e.loc, "'" + f.name + "' expects " + std::to_string(f.params.size()) + " argument(s), got " +
                      std::to_string(args.size()));
    for (std::size_t i = 0; i < args.size(); ++i)
      if (!assignable(f.params[i].type, args[i])) mismatch(call.args[i].loc, f.params[i].type, args[i]);
    return f.return_type;
  }

  Type check_binary(Expr& e, BinaryExpr& bin) {
    Type l = check(*bin.lhs);
    Type r = check(*bin.rhs);
    require_value(*bin.lhs, l);
    require_value(*bin.rhs, r);
    auto bad = [&]() -> Type {
      fail(e.loc, std::string("type mismatch: operator '") + op_text(bin.op) + "' on " + to_string(l) + " and " +
                      to_string(r));
    };
    switch (bin.op) {
      case BinOp::Add:
        if (l.is(BaseType::String) || r.is(BaseType::String)) return Type::of(BaseType::String);
        [[fallthrough]];
      case BinOp::Sub:
      case BinOp::Mul:
      case BinOp::Div:
        if (!l.is_numeric() || !r.is_numeric()) return bad();
        return (l.is(BaseType::Float) || r.is(BaseType::Float)) ? Type::of(BaseType::Float) : Type::of(BaseType::Int);
      case BinOp::Mod:
        if (!l.is_numeric() || !r.is_numeric() || l.is(BaseType::Float) || r.is(BaseType::Float)) return bad();
        return Type::of(BaseType::Int);
      case BinOp::Eq:
      case BinOp::Ne:
        if (l.is(BaseType::Bool) && r.is(BaseType::Bool)) return Type::of(BaseType::Bool);
        [[fallthrough]];
      case BinOp::Lt:
      case BinOp::Le:
      case BinOp::Gt:
      case BinOp::Ge:
        if ((l.is_numeric() && r.is_numeric()) || (l.is(BaseType::String) && r.is(BaseType::String)))
          return Type::of(BaseType::Bool);
        return bad();
      case BinOp::And:
      case BinOp::Or:
      case BinOp::Xor:
        if (!l.is(BaseType::Bool) || !r.is(BaseType::Bool)) return bad();
        return Type::of(BaseType::Bool);
    }
    return bad();
  }
};

// Parse and resolve MiniImp source text.
inline Program parse_program(std::string_view source) {
  Program p = Parser(source).parse_program();
  Resolver(p).run();
  return p;
}

}  // namespace flipguard
