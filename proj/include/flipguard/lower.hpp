#pragma once

#include <set>
#include <string>
#include <vector>

#include "flipguard/ast.hpp"
#include "flipguard/emit.hpp"

namespace flipguard {

namespace detail {

class Lowering {
 public:
  explicit Lowering(Program& p) : p_(p) {}

  void run() {
    for (std::size_t fi = 0; fi < p_.functions.size(); ++fi) {
      fn_index_ = static_cast<int>(fi);
      fn_ = &p_.functions[fi];
      used_order_.clear();
      collect_used(fn_->body);
      scopes_.assign(1, {});
      for (const auto& param : fn_->params) scopes_.back().insert(param.name);
      temp_counter_ = 0;
      lower_block(fn_->body);
    }
  }

 private:
  Program& p_;
  Function* fn_ = nullptr;
  int fn_index_ = -1;
  std::vector<std::string> used_order_;  // names used or defined in the function, first appearance
  std::vector<std::set<std::string>> scopes_;
  int temp_counter_ = 0;

  bool is_global(const std::string& name) const {
    for (const auto& g : p_.globals)
      if (g.decl.name == name) return true;
    return false;
  }

  void note_used(const std::string& name) {
    for (const auto& n : used_order_)
      if (n == name) return;
    used_order_.push_back(name);
  }

  void collect_used(const Expr& e) {
    if (auto v = e.as<VarExpr>()) {
      note_used(v->name);
    } else if (auto ix = e.as<IndexExpr>()) {
      collect_used(*ix->base);
      collect_used(*ix->index);
    } else if (auto c = e.as<CallExpr>()) {
      for (const auto& a : c->args) collect_used(a);
    } else if (auto u = e.as<UnaryExpr>()) {
      collect_used(*u->operand);
    } else if (auto b = e.as<BinaryExpr>()) {
      collect_used(*b->lhs);
      collect_used(*b->rhs);
    } else if (auto a = e.as<ArrayExpr>()) {
      for (const auto& item : a->items) collect_used(item);
    } else if (auto n = e.as<NewArrayExpr>()) {
      collect_used(*n->size);
    }
  }

  void collect_used(const Block& b) {
    for (const auto& s : b.stmts) {
      if (auto d = s.as<DeclStmt>()) {
        note_used(d->name);
        if (d->init) collect_used(*d->init);
      } else if (auto a = s.as<AssignStmt>()) {
        collect_used(a->target);
        collect_used(a->value);
      } else if (auto i = s.as<IfStmt>()) {
        collect_used(i->cond);
        collect_used(i->then_block);
        if (i->else_block) collect_used(*i->else_block);
      } else if (auto w = s.as<WhileStmt>()) {
        collect_used(w->cond);
        collect_used(w->body);
      } else if (auto r = s.as<ReturnStmt>()) {
        if (r->value) collect_used(*r->value);
      } else if (auto pr = s.as<PrintStmt>()) {
        collect_used(pr->value);
      } else if (auto es = s.as<ExprStmt>()) {
        collect_used(es->expr);
      }
    }
  }

  bool visible(const std::string& name) const {
    for (const auto& sc : scopes_)
      if (sc.count(name)) return true;
    return false;
  }

  void lower_block(Block& b) {
    scopes_.emplace_back();
    for (auto& s : b.stmts) {
      if (auto d = s.as<DeclStmt>()) {
        scopes_.back().insert(d->name);
      } else if (auto i = s.as<IfStmt>()) {
        lower_condition(i->cond, Construct::If);
        lower_block(i->then_block);
        if (i->else_block) lower_block(*i->else_block);
      } else if (auto w = s.as<WhileStmt>()) {
        lower_condition(w->cond, Construct::While);
        lower_block(w->body);
      }
    }
    scopes_.pop_back();
  }

  // Walks the boolean skeleton (!, &&, ||, ^) of a condition; every
  // comparison reached becomes one site, numbered in source order.
  void lower_condition(Expr& e, Construct construct) {
    if (auto u = e.as<UnaryExpr>(); u && u->op == UnOp::Not) {
      lower_condition(*u->operand, construct);
      return;
    }
    auto b = e.as<BinaryExpr>();
    if (!b) return;
    if (b->op == BinOp::And || b->op == BinOp::Or || b->op == BinOp::Xor) {
      lower_condition(*b->lhs, construct);
      lower_condition(*b->rhs, construct);
      return;
    }
    if (!is_comparison(b->op)) return;
    make_site(e, *b, construct);
  }

  std::string fresh_temp() {
    for (;;) {
      std::string name = "_t" + std::to_string(temp_counter_++);
      bool clash = is_global(name) || p_.find_function(name) >= 0;
      for (const auto& n : fn_->slot_names) clash = clash || n == name;
      if (!clash) return name;
    }
  }

  void hoist_calls(Expr& e, BinaryExpr& site) {
    if (auto c = e.as<CallExpr>()) {
      if (c->intrinsic == Intrinsic::None) {
        HoistedCall h;
        h.temp = fresh_temp();
        fn_->slot_names.push_back(h.temp);
        fn_->slot_types.push_back(e.type);
        h.slot = static_cast<int>(fn_->slot_names.size()) - 1;
        Expr var = make_expr(VarExpr{h.temp, Slot{Scope::Local, h.slot}}, e.type);
        var.loc = e.loc;
        h.call = box<Expr>(std::move(e));
        e = std::move(var);
        site.hoisted.push_back(std::move(h));
        return;
      }
      for (auto& a : c->args) hoist_calls(a, site);
    } else if (auto ix = e.as<IndexExpr>()) {
      hoist_calls(*ix->base, site);
      hoist_calls(*ix->index, site);
    } else if (auto u = e.as<UnaryExpr>()) {
      hoist_calls(*u->operand, site);
    } else if (auto b = e.as<BinaryExpr>()) {
      hoist_calls(*b->lhs, site);
      hoist_calls(*b->rhs, site);
    } else if (auto a = e.as<ArrayExpr>()) {
      for (auto& item : a->items) hoist_calls(item, site);
    } else if (auto n = e.as<NewArrayExpr>()) {
      hoist_calls(*n->size, site);
    }
  }

  bool is_temp(const std::string& name, const BinaryExpr& site) const {
    for (const auto& h : site.hoisted)
      if (h.temp == name) return true;
    return false;
  }

  bool mentions_temp(const Expr& e, const BinaryExpr& site) const {
    if (auto v = e.as<VarExpr>()) return is_temp(v->name, site);
    if (auto ix = e.as<IndexExpr>()) return mentions_temp(*ix->base, site) || mentions_temp(*ix->index, site);
    if (auto c = e.as<CallExpr>()) {
      for (const auto& a : c->args)
        if (mentions_temp(a, site)) return true;
      return false;
    }
    if (auto u = e.as<UnaryExpr>()) return mentions_temp(*u->operand, site);
    if (auto b = e.as<BinaryExpr>()) return mentions_temp(*b->lhs, site) || mentions_temp(*b->rhs, site);
    if (auto a = e.as<ArrayExpr>()) {
      for (const auto& item : a->items)
        if (mentions_temp(item, site)) return true;
      return false;
    }
    if (auto n = e.as<NewArrayExpr>()) return mentions_temp(*n->size, site);
    return false;
  }

  Type slot_type(Slot s) const {
    if (s.scope == Scope::Global) return p_.globals[static_cast<std::size_t>(s.index)].decl.type;
    return fn_->slot_types[static_cast<std::size_t>(s.index)];
  }

  static void add_binding(std::vector<Binding>& out, Binding b) {
    for (const auto& existing : out)
      if (existing.name == b.name) return;
    out.push_back(std::move(b));
  }

  Binding variable_binding(const std::string& name, Slot slot, const BinaryExpr* site) const {
    Binding b;
    b.name = name;
    b.slot = slot;
    b.type = slot_type(slot);
    b.kind = Binding::Kind::Variable;
    b.expr = make_expr(VarExpr{name, slot}, b.type);
    b.uses_temp = site && is_temp(name, *site);
    return b;
  }

  // Values read directly by the clause: variables, temporaries and the
  // array/string elements it indexes.
  void collect_use(const Expr& e, const BinaryExpr& site, std::vector<Binding>& out) const {
    if (auto v = e.as<VarExpr>()) {
      add_binding(out, variable_binding(v->name, v->slot, &site));
    } else if (auto ix = e.as<IndexExpr>()) {
      if (ix->base->as<VarExpr>()) {
        Binding b;
        b.name = emit_expr(e);
        b.type = e.type;
        b.kind = Binding::Kind::Element;
        b.expr = e;
        b.uses_temp = mentions_temp(e, site);
        add_binding(out, std::move(b));
      } else {
        collect_use(*ix->base, site, out);
      }
      collect_use(*ix->index, site, out);
    } else if (auto c = e.as<CallExpr>()) {
      for (const auto& a : c->args) collect_use(a, site, out);
    } else if (auto u = e.as<UnaryExpr>()) {
      collect_use(*u->operand, site, out);
    } else if (auto b = e.as<BinaryExpr>()) {
      collect_use(*b->lhs, site, out);
      collect_use(*b->rhs, site, out);
    } else if (auto a = e.as<ArrayExpr>()) {
      for (const auto& item : a->items) collect_use(item, site, out);
    } else if (auto n = e.as<NewArrayExpr>()) {
      collect_use(*n->size, site, out);
    }
  }

  Slot slot_of(const std::string& name) const {
    for (std::size_t i = 0; i < fn_->slot_names.size(); ++i)
      if (fn_->slot_names[i] == name) return {Scope::Local, static_cast<int>(i)};
    for (std::size_t i = 0; i < p_.globals.size(); ++i)
      if (p_.globals[i].decl.name == name) return {Scope::Global, static_cast<int>(i)};
    return {};
  }

  void make_site(Expr& e, BinaryExpr& b, Construct construct) {
    PredicateSite site;
    site.id = static_cast<int>(p_.sites.size());
    site.function = fn_->name;
    site.function_index = fn_index_;
    site.loc = e.loc;
    site.construct = construct;
    b.site = site.id;

    hoist_calls(*b.lhs, b);
    hoist_calls(*b.rhs, b);
    for (const auto& h : b.hoisted) site.temps.push_back(h.temp);
    site.clause = emit_expr(e);

    collect_use(*b.lhs, b, site.captures);
    collect_use(*b.rhs, b, site.captures);
    for (std::size_t i = 0; i < fn_->params.size(); ++i)
      add_binding(site.captures, variable_binding(fn_->params[i].name, {Scope::Local, static_cast<int>(i)}, nullptr));
    for (const auto& name : used_order_) {
      bool global = is_global(name) && !visible(name);
      if (!global && !visible(name)) continue;
      add_binding(site.captures, variable_binding(name, slot_of(name), nullptr));
    }
    p_.sites.push_back(std::move(site));
  }
};

}  // namespace detail

// Numbers every comparison in an if/while condition as a predicate site and
// hoists user-function calls out of those comparisons into temporaries.
// Short-circuit evaluation of &&/|| over sites is the branch chain.
inline Program lower_predicates(Program p) {
  if (!p.sites.empty()) return p;
  detail::Lowering(p).run();
  return p;
}

}  // namespace flipguard
