#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "flipguard/value.hpp"

namespace flipguard {

struct SourceLoc {
  int line = 0;
  int column = 0;
};

// Syntax, resolution and type errors all carry a position.
class SourceError : public std::runtime_error {
 public:
  SourceError(SourceLoc loc, const std::string& msg)
      : std::runtime_error(std::to_string(loc.line) + ":" + std::to_string(loc.column) + ": " + msg),
        loc_(loc), message_(msg) {}
  SourceLoc loc() const { return loc_; }
  const std::string& message() const { return message_; }

 private:
  SourceLoc loc_;
  std::string message_;
};

// Owning pointer with deep-copy value semantics, for recursive AST nodes.
template <class T>
class box {
 public:
  box() = default;
  box(T value) : ptr_(std::make_unique<T>(std::move(value))) {}
  box(const box& other) : ptr_(other.ptr_ ? std::make_unique<T>(*other.ptr_) : nullptr) {}
  box(box&&) noexcept = default;
  box& operator=(const box& other) {
    if (this != &other) ptr_ = other.ptr_ ? std::make_unique<T>(*other.ptr_) : nullptr;
    return *this;
  }
  box& operator=(box&&) noexcept = default;

  T& operator*() { return *ptr_; }
  const T& operator*() const { return *ptr_; }
  T* operator->() { return ptr_.get(); }
  const T* operator->() const { return ptr_.get(); }
  T* get() { return ptr_.get(); }
  const T* get() const { return ptr_.get(); }
  explicit operator bool() const { return static_cast<bool>(ptr_); }

 private:
  std::unique_ptr<T> ptr_;
};

enum class BinOp { Add, Sub, Mul, Div, Mod, Eq, Ne, Lt, Le, Gt, Ge, And, Or, Xor };
enum class UnOp { Neg, Not };
enum class Intrinsic { None, Hash, Len, ToInt, ToFloat, ToChar };

inline bool is_comparison(BinOp op) {
  return op == BinOp::Eq || op == BinOp::Ne || op == BinOp::Lt || op == BinOp::Le ||
         op == BinOp::Gt || op == BinOp::Ge;
}

inline const char* op_text(BinOp op) {
  switch (op) {
    case BinOp::Add: return "+";
    case BinOp::Sub: return "-";
    case BinOp::Mul: return "*";
    case BinOp::Div: return "/";
    case BinOp::Mod: return "%";
    case BinOp::Eq: return "==";
    case BinOp::Ne: return "!=";
    case BinOp::Lt: return "<";
    case BinOp::Le: return "<=";
    case BinOp::Gt: return ">";
    case BinOp::Ge: return ">=";
    case BinOp::And: return "&&";
    case BinOp::Or: return "||";
    case BinOp::Xor: return "^";
  }
  return "?";
}

// Lower binds looser.
inline int precedence(BinOp op) {
  switch (op) {
    case BinOp::Or: return 1;
    case BinOp::And: return 2;
    case BinOp::Xor: return 3;
    case BinOp::Eq:
    case BinOp::Ne: return 4;
    case BinOp::Lt:
    case BinOp::Le:
    case BinOp::Gt:
    case BinOp::Ge: return 5;
    case BinOp::Add:
    case BinOp::Sub: return 6;
    case BinOp::Mul:
    case BinOp::Div:
    case BinOp::Mod: return 7;
  }
  return 0;
}

inline constexpr int kUnaryPrecedence = 8;

enum class Scope { Unresolved, Global, Local };

struct Slot {
  Scope scope = Scope::Unresolved;
  int index = -1;
};

struct Expr;

struct LiteralExpr {
  Value value;
};

struct VarExpr {
  std::string name;
  Slot slot;
};

struct IndexExpr {
  box<Expr> base;
  box<Expr> index;
};

struct CallExpr {
  std::string callee;
  std::vector<Expr> args;
  int function = -1;
  Intrinsic intrinsic = Intrinsic::None;
};

struct UnaryExpr {
  UnOp op;
  box<Expr> operand;
};

// A user-function call lifted out of a predicate clause into a temporary.
// It is evaluated when the clause is reached, so short-circuit order holds.
struct HoistedCall {
  std::string temp;
  int slot = -1;
  box<Expr> call;
};

struct BinaryExpr {
  BinOp op;
  box<Expr> lhs;
  box<Expr> rhs;
  int site = -1;  // predicate site id once lowered
  std::vector<HoistedCall> hoisted;
};

struct ArrayExpr {
  std::vector<Expr> items;
};

struct NewArrayExpr {
  BaseType element = BaseType::Int;
  box<Expr> size;
};

struct Expr {
  std::variant<LiteralExpr, VarExpr, IndexExpr, CallExpr, UnaryExpr, BinaryExpr, ArrayExpr, NewArrayExpr> node;
  SourceLoc loc;
  Type type;             // set by resolution
  bool parens = false;   // formatting only

  template <class T>
  T* as() { return std::get_if<T>(&node); }
  template <class T>
  const T* as() const { return std::get_if<T>(&node); }
};

inline Expr make_expr(auto node, Type type = {}, bool parens = false) {
  Expr e;
  e.node = std::move(node);
  e.type = type;
  e.parens = parens;
  return e;
}

struct Stmt;

struct Block {
  std::vector<Stmt> stmts;
  std::vector<int> scope_slots;  // locals declared directly in this block
};

struct DeclStmt {
  Type type;
  std::string name;
  std::optional<Expr> init;
  int slot = -1;
};

struct AssignStmt {
  Expr target;
  Expr value;
};

struct IfStmt {
  Expr cond;
  Block then_block;
  std::optional<Block> else_block;
};

struct WhileStmt {
  Expr cond;
  Block body;
};

struct ReturnStmt {
  std::optional<Expr> value;
};

struct PrintStmt {
  Expr value;
};

struct ExprStmt {
  Expr expr;
};

struct Stmt {
  std::variant<DeclStmt, AssignStmt, IfStmt, WhileStmt, ReturnStmt, PrintStmt, ExprStmt> node;
  SourceLoc loc;

  template <class T>
  T* as() { return std::get_if<T>(&node); }
  template <class T>
  const T* as() const { return std::get_if<T>(&node); }
};

struct Param {
  Type type;
  std::string name;
  SourceLoc loc;
};

struct Function {
  Type return_type;
  std::string name;
  std::vector<Param> params;
  Block body;
  SourceLoc loc;
  // Local slot table: parameters first, then declared locals, then temps.
  std::vector<std::string> slot_names;
  std::vector<Type> slot_types;
};

struct Global {
  DeclStmt decl;
  SourceLoc loc;
};

enum class Construct { If, While };

// One value captured at predicate entry. Variables read their slot;
// elements (`a[i]` read directly by the clause) re-evaluate `expr`.
struct Binding {
  enum class Kind { Variable, Element };
  std::string name;
  Type type;
  Kind kind = Kind::Variable;
  Slot slot;
  Expr expr;              // source form, also used to render guards
  bool uses_temp = false;  // refers to a hoisted temporary
};

struct PredicateSite {
  int id = -1;
  std::string function;
  int function_index = -1;
  SourceLoc loc;
  std::string clause;
  Construct construct = Construct::If;
  std::vector<Binding> captures;
  std::vector<std::string> temps;  // hoisted temporaries owned by this clause
};

struct Program {
  std::vector<Global> globals;
  std::vector<Function> functions;
  int entry = -1;
  std::vector<PredicateSite> sites;  // empty until lowered

  const Function& main() const { return functions.at(static_cast<std::size_t>(entry)); }

  int find_function(const std::string& name) const {
    for (std::size_t i = 0; i < functions.size(); ++i)
      if (functions[i].name == name) return static_cast<int>(i);
    return -1;
  }
};

// Structural equality: node kinds, operators, names, literal values and types
// as written. Positions, parentheses and resolution data are ignored.
namespace detail {

bool equal(const Expr& a, const Expr& b);
bool equal(const Block& a, const Block& b);

inline bool equal_exprs(const std::vector<Expr>& a, const std::vector<Expr>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!equal(a[i], b[i])) return false;
  return true;
}

inline bool equal(const Expr& a, const Expr& b) {
  if (a.node.index() != b.node.index()) return false;
  if (auto x = a.as<LiteralExpr>()) return x->value == b.as<LiteralExpr>()->value;
  if (auto x = a.as<VarExpr>()) return x->name == b.as<VarExpr>()->name;
  if (auto x = a.as<IndexExpr>()) {
    auto y = b.as<IndexExpr>();
    return equal(*x->base, *y->base) && equal(*x->index, *y->index);
  }
  if (auto x = a.as<CallExpr>()) {
    auto y = b.as<CallExpr>();
    return x->callee == y->callee && equal_exprs(x->args, y->args);
  }
  if (auto x = a.as<UnaryExpr>()) {
    auto y = b.as<UnaryExpr>();
    return x->op == y->op && equal(*x->operand, *y->operand);
  }
  if (auto x = a.as<BinaryExpr>()) {
    auto y = b.as<BinaryExpr>();
    return x->op == y->op && equal(*x->lhs, *y->lhs) && equal(*x->rhs, *y->rhs);
  }
  if (auto x = a.as<ArrayExpr>()) return equal_exprs(x->items, b.as<ArrayExpr>()->items);
  auto x = a.as<NewArrayExpr>();
  auto y = b.as<NewArrayExpr>();
  return x->element == y->element && equal(*x->size, *y->size);
}

inline bool equal_opt(const std::optional<Expr>& a, const std::optional<Expr>& b) {
  if (a.has_value() != b.has_value()) return false;
  return !a || equal(*a, *b);
}

inline bool equal(const Stmt& a, const Stmt& b) {
  if (a.node.index() != b.node.index()) return false;
  if (auto x = a.as<DeclStmt>()) {
    auto y = b.as<DeclStmt>();
    return x->type == y->type && x->name == y->name && equal_opt(x->init, y->init);
  }
  if (auto x = a.as<AssignStmt>()) {
    auto y = b.as<AssignStmt>();
    return equal(x->target, y->target) && equal(x->value, y->value);
  }
  if (auto x = a.as<IfStmt>()) {
    auto y = b.as<IfStmt>();
    if (!equal(x->cond, y->cond) || !equal(x->then_block, y->then_block)) return false;
    if (x->else_block.has_value() != y->else_block.has_value()) return false;
    return !x->else_block || equal(*x->else_block, *y->else_block);
  }
  if (auto x = a.as<WhileStmt>()) {
    auto y = b.as<WhileStmt>();
    return equal(x->cond, y->cond) && equal(x->body, y->body);
  }
  if (auto x = a.as<ReturnStmt>()) return equal_opt(x->value, b.as<ReturnStmt>()->value);
  if (auto x = a.as<PrintStmt>()) return equal(x->value, b.as<PrintStmt>()->value);
  return equal(a.as<ExprStmt>()->expr, b.as<ExprStmt>()->expr);
}

inline bool equal(const Block& a, const Block& b) {
  if (a.stmts.size() != b.stmts.size()) return false;
  for (std::size_t i = 0; i < a.stmts.size(); ++i)
    if (!equal(a.stmts[i], b.stmts[i])) return false;
  return true;
}

}  // namespace detail

inline bool structurally_equal(const Expr& a, const Expr& b) { return detail::equal(a, b); }

inline bool structurally_equal(const Program& a, const Program& b) {
  if (a.globals.size() != b.globals.size() || a.functions.size() != b.functions.size()) return false;
  for (std::size_t i = 0; i < a.globals.size(); ++i) {
    const auto& x = a.globals[i].decl;
    const auto& y = b.globals[i].decl;
    if (x.type != y.type || x.name != y.name || !detail::equal_opt(x.init, y.init)) return false;
  }
  for (std::size_t i = 0; i < a.functions.size(); ++i) {
    const auto& f = a.functions[i];
    const auto& g = b.functions[i];
    if (f.name != g.name || f.return_type != g.return_type || f.params.size() != g.params.size()) return false;
    for (std::size_t k = 0; k < f.params.size(); ++k)
      if (f.params[k].name != g.params[k].name || f.params[k].type != g.params[k].type) return false;
    if (!detail::equal(f.body, g.body)) return false;
  }
  return true;
}

}  // namespace flipguard
