#pragma once

#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "flipguard/ast.hpp"

namespace flipguard {

inline void append_escaped(std::string& out, char32_t c, char quote) {
  switch (c) {
    case U'\n': out += "\\n"; return;
    case U'\t': out += "\\t"; return;
    case U'\r': out += "\\r"; return;
    case U'\0': out += "\\0"; return;
    case U'\\': out += "\\\\"; return;
    default: break;
  }
  if (c == static_cast<char32_t>(quote)) {
    out += '\\';
    out += quote;
    return;
  }
  if (c < 0x20 || c == 0x7F) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "\\u{%X}", static_cast<unsigned>(c));
    out += buf;
    return;
  }
  append_utf8(out, c);
}

inline std::string char_literal(char32_t c) {
  std::string out = "'";
  append_escaped(out, c, '\'');
  out += '\'';
  return out;
}

inline std::string string_literal(std::u32string_view s) {
  std::string out = "\"";
  for (char32_t c : s) append_escaped(out, c, '"');
  out += '"';
  return out;
}

// Source spelling of a value; arrays use the `[a, b]` literal form.
inline std::string literal_text(const Value& v) {
  if (v.is_int()) return std::to_string(v.as_int());
  if (v.is_float()) return format_float(v.as_float());
  if (v.is_char()) return char_literal(v.as_char());
  if (v.is_string()) return string_literal(v.as_string());
  if (v.is_bool()) return v.as_bool() ? "true" : "false";
  std::string out = "[";
  const auto& items = v.as_array();
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += literal_text(items[i]);
  }
  return out + "]";
}

// Canonical pretty-printer. Lowered programs print as their source form:
// hoisted temporaries are shown as the calls they replaced.
class Emitter {
 public:
  std::string program(const Program& p) {
    out_.clear();
    for (const auto& g : p.globals) {
      out_ += to_string(g.decl.type) + " " + g.decl.name;
      if (g.decl.init) out_ += " = " + expr(*g.decl.init);
      out_ += ";\n";
    }
    for (std::size_t i = 0; i < p.functions.size(); ++i) {
      if (i > 0 || !p.globals.empty()) out_ += "\n";
      function(p.functions[i]);
    }
    return out_;
  }

  std::string expr(const Expr& e) {
    std::string s;
    emit_expr(s, e, 0, false);
    return s;
  }

 private:
  std::string out_;
  int indent_ = 0;
  std::vector<const HoistedCall*> temps_;

  void line(const std::string& text) {
    out_.append(static_cast<std::size_t>(indent_) * 2, ' ');
    out_ += text;
    out_ += '\n';
  }

  void function(const Function& f) {
    std::string head = to_string(f.return_type) + " " + f.name + "(";
    for (std::size_t i = 0; i < f.params.size(); ++i) {
      if (i) head += ", ";
      head += to_string(f.params[i].type) + " " + f.params[i].name;
    }
    head += ")";
    open_block(head, f.body);
    out_ += "}\n";
  }

  // Writes `head {` and the body; the caller closes the brace.
  void open_block(const std::string& head, const Block& b) {
    if (b.stmts.empty()) {
      out_.append(static_cast<std::size_t>(indent_) * 2, ' ');
      out_ += head + " { ";
      return;
    }
    line(head + " {");
    ++indent_;
    for (const auto& s : b.stmts) stmt(s);
    --indent_;
    out_.append(static_cast<std::size_t>(indent_) * 2, ' ');
  }

  void close_line() { out_ += "}\n"; }

  void stmt(const Stmt& s) {
    if (auto d = s.as<DeclStmt>()) {
      std::string text = to_string(d->type) + " " + d->name;
      if (d->init) text += " = " + expr(*d->init);
      line(text + ";");
    } else if (auto a = s.as<AssignStmt>()) {
      line(expr(a->target) + " = " + expr(a->value) + ";");
    } else if (auto i = s.as<IfStmt>()) {
      if_chain(*i, "if (" + expr(i->cond) + ")");
    } else if (auto w = s.as<WhileStmt>()) {
      open_block("while (" + expr(w->cond) + ")", w->body);
      close_line();
    } else if (auto r = s.as<ReturnStmt>()) {
      line(r->value ? "return " + expr(*r->value) + ";" : "return;");
    } else if (auto pr = s.as<PrintStmt>()) {
      line("print(" + expr(pr->value) + ");");
    } else if (auto es = s.as<ExprStmt>()) {
      line(expr(es->expr) + ";");
    }
  }

  void if_chain(const IfStmt& i, const std::string& head) {
    open_block(head, i.then_block);
    else_tail(i);
  }

  // `} else if (...) {` chains stay on the closing-brace line.
  void else_tail(const IfStmt& i) {
    if (!i.else_block) {
      close_line();
      return;
    }
    const Block& eb = *i.else_block;
    out_ += "} ";
    if (eb.stmts.size() == 1 && eb.stmts[0].as<IfStmt>()) {
      const IfStmt& nested = *eb.stmts[0].as<IfStmt>();
      tail_block("else if (" + expr(nested.cond) + ")", nested.then_block);
      else_tail(nested);
      return;
    }
    tail_block("else", eb);
    close_line();
  }

  // Like open_block but continues the current line (no leading indent).
  void tail_block(const std::string& head, const Block& b) {
    if (b.stmts.empty()) {
      out_ += head + " { ";
      return;
    }
    out_ += head + " {\n";
    ++indent_;
    for (const auto& s : b.stmts) stmt(s);
    --indent_;
    out_.append(static_cast<std::size_t>(indent_) * 2, ' ');
  }

  const HoistedCall* temp_named(const std::string& name) const {
    for (auto it = temps_.rbegin(); it != temps_.rend(); ++it)
      if ((*it)->temp == name) return *it;
    return nullptr;
  }

  void emit_expr(std::string& s, const Expr& e, int parent_prec, bool right) {
    if (auto lit = e.as<LiteralExpr>()) {
      s += literal_text(lit->value);
      return;
    }
    if (auto var = e.as<VarExpr>()) {
      if (const HoistedCall* h = temp_named(var->name)) {
        emit_expr(s, *h->call, parent_prec, right);
        return;
      }
      s += var->name;
      return;
    }
    if (auto ix = e.as<IndexExpr>()) {
      const Expr& base = *ix->base;
      bool wrap = base.as<BinaryExpr>() || base.as<UnaryExpr>() || base.parens ||
                  (base.as<LiteralExpr>() && base.as<LiteralExpr>()->value.is_int() &&
                   base.as<LiteralExpr>()->value.as_int() < 0);
      if (wrap) s += '(';
      emit_expr(s, base, 100, false);
      if (wrap) s += ')';
      s += '[';
      emit_expr(s, *ix->index, 0, false);
      s += ']';
      return;
    }
    if (auto call = e.as<CallExpr>()) {
      s += call->callee + "(";
      for (std::size_t i = 0; i < call->args.size(); ++i) {
        if (i) s += ", ";
        emit_expr(s, call->args[i], 0, false);
      }
      s += ')';
      return;
    }
    if (auto un = e.as<UnaryExpr>()) {
      if (e.parens) s += '(';
      s += un->op == UnOp::Neg ? "-" : "!";
      emit_expr(s, *un->operand, kUnaryPrecedence, false);
      if (e.parens) s += ')';
      return;
    }
    if (auto bin = e.as<BinaryExpr>()) {
      int prec = precedence(bin->op);
      bool wrap = e.parens || prec < parent_prec || (prec == parent_prec && right);
      if (!bin->hoisted.empty())
        for (const auto& h : bin->hoisted) temps_.push_back(&h);
      if (wrap) s += '(';
      emit_expr(s, *bin->lhs, prec, false);
      s += ' ';
      s += op_text(bin->op);
      s += ' ';
      emit_expr(s, *bin->rhs, prec, true);
      if (wrap) s += ')';
      for (std::size_t k = 0; k < bin->hoisted.size(); ++k) temps_.pop_back();
      return;
    }
    if (auto arr = e.as<ArrayExpr>()) {
      s += '[';
      for (std::size_t i = 0; i < arr->items.size(); ++i) {
        if (i) s += ", ";
        emit_expr(s, arr->items[i], 0, false);
      }
      s += ']';
      return;
    }
    auto na = e.as<NewArrayExpr>();
    s += "new " + base_name(na->element) + "[";
    emit_expr(s, *na->size, 0, false);
    s += ']';
  }
};

inline std::string emit_source(const Program& p) { return Emitter().program(p); }
inline std::string emit_expr(const Expr& e) { return Emitter().expr(e); }

}  // namespace flipguard
