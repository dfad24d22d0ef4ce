#pragma once

#include <cctype>
#include <charconv>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "flipguard/ast.hpp"

namespace flipguard {

enum class Tok {
  End, Ident, IntLit, FloatLit, CharLit, StringLit,
  // keywords
  KwInt, KwFloat, KwChar, KwString, KwBool, KwVoid, KwIf, KwElse, KwWhile, KwReturn, KwPrint,
  KwTrue, KwFalse, KwNew,
  // punctuation
  LParen, RParen, LBrace, RBrace, LBracket, RBracket, Comma, Semi, Assign,
  Eq, Ne, Lt, Le, Gt, Ge, Plus, Minus, Star, Slash, Percent, AndAnd, OrOr, Bang, Caret,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;        // identifier / literal spelling
  std::uint64_t int_value = 0;
  double float_value = 0.0;
  std::u32string str_value;  // char and string literals
  SourceLoc loc;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> tokenize() {
    std::vector<Token> out;
    for (;;) {
      Token t = next();
      out.push_back(t);
      if (t.kind == Tok::End) break;
    }
    return out;
  }

 private:
  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;

  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
  }

  char advance() {
    char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  [[noreturn]] void fail(SourceLoc loc, const std::string& msg) const { throw SourceError(loc, msg); }

  void skip_trivia() {
    for (;;) {
      char c = peek();
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else if (c == '/' && peek(1) == '/') {
        while (pos_ < src_.size() && peek() != '\n') advance();
      } else if (c == '/' && peek(1) == '*') {
        SourceLoc at{line_, col_};
        advance();
        advance();
        while (pos_ < src_.size() && !(peek() == '*' && peek(1) == '/')) advance();
        if (pos_ >= src_.size()) fail(at, "unterminated comment");
        advance();
        advance();
      } else {
        return;
      }
    }
  }

  // One code point, decoding escapes.
  char32_t read_char_unit(SourceLoc at) {
    if (pos_ >= src_.size()) fail(at, "unterminated literal");
    char c = advance();
    if (c == '\n') fail(at, "newline in literal");
    if (c != '\\') {
      auto b = static_cast<unsigned char>(c);
      if (b < 0x80) return b;
      int extra = (b >> 5) == 0x6 ? 1 : (b >> 4) == 0xE ? 2 : (b >> 3) == 0x1E ? 3 : -1;
      if (extra < 0) fail(at, "invalid UTF-8 in literal");
      char32_t cp = b & (0x3F >> extra);
      for (int k = 0; k < extra; ++k) {
        if (pos_ >= src_.size()) fail(at, "invalid UTF-8 in literal");
        cp = (cp << 6) | (static_cast<unsigned char>(advance()) & 0x3F);
      }
      return cp;
    }
    if (pos_ >= src_.size()) fail(at, "unterminated literal");
    char e = advance();
    switch (e) {
      case 'n': return U'\n';
      case 't': return U'\t';
      case 'r': return U'\r';
      case '0': return U'\0';
      case '\\': return U'\\';
      case '\'': return U'\'';
      case '"': return U'"';
      case 'u': {
        if (peek() != '{') fail(at, "expected '{' after \\u");
        advance();
        char32_t cp = 0;
        int digits = 0;
        while (std::isxdigit(static_cast<unsigned char>(peek()))) {
          char h = advance();
          cp = cp * 16 + static_cast<char32_t>(std::isdigit(static_cast<unsigned char>(h)) ? h - '0'
                                                                                      : (std::tolower(h) - 'a' + 10));
          if (++digits > 6) fail(at, "code point escape too long");
        }
        if (digits == 0 || peek() != '}') fail(at, "malformed \\u{...} escape");
        advance();
        if (cp > 0x10FFFF) fail(at, "code point out of range");
        return cp;
      }
      default: fail(at, std::string("unknown escape '\\") + e + "'");
    }
  }

  Token next() {
    skip_trivia();
    Token t;
    t.loc = {line_, col_};
    if (pos_ >= src_.size()) return t;
    char c = peek();

    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_') advance();
      t.text = std::string(src_.substr(start, pos_ - start));
      t.kind = keyword(t.text);
      return t;
    }

    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
      bool is_float = false;
      if (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
        is_float = true;
        advance();
        while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
      }
      if (peek() == 'e' || peek() == 'E') {
        std::size_t save = pos_;
        int save_col = col_;
        advance();
        if (peek() == '+' || peek() == '-') advance();
        if (std::isdigit(static_cast<unsigned char>(peek()))) {
          is_float = true;
          while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
        } else {
          pos_ = save;
          col_ = save_col;
        }
      }
      t.text = std::string(src_.substr(start, pos_ - start));
      if (is_float) {
        t.kind = Tok::FloatLit;
        auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.float_value);
        if (res.ec != std::errc{}) fail(t.loc, "malformed float literal '" + t.text + "'");
      } else {
        t.kind = Tok::IntLit;
        auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.int_value);
        if (res.ec != std::errc{}) fail(t.loc, "integer literal out of range '" + t.text + "'");
      }
      return t;
    }

    if (c == '\'') {
      advance();
      if (peek() == '\'') fail(t.loc, "empty char literal");
      char32_t cp = read_char_unit(t.loc);
      if (peek() != '\'') fail(t.loc, "char literal must hold one character");
      advance();
      t.kind = Tok::CharLit;
      t.str_value = std::u32string(1, cp);
      return t;
    }

    if (c == '"') {
      advance();
      t.kind = Tok::StringLit;
      while (peek() != '"') {
        if (pos_ >= src_.size()) fail(t.loc, "unterminated string literal");
        t.str_value.push_back(read_char_unit(t.loc));
      }
      advance();
      return t;
    }

    advance();
    auto two = [&](char second, Tok yes, Tok no) {
      if (peek() == second) {
        advance();
        return yes;
      }
      return no;
    };
    switch (c) {
      case '(': t.kind = Tok::LParen; break;
      case ')': t.kind = Tok::RParen; break;
      case '{': t.kind = Tok::LBrace; break;
      case '}': t.kind = Tok::RBrace; break;
      case '[': t.kind = Tok::LBracket; break;
      case ']': t.kind = Tok::RBracket; break;
      case ',': t.kind = Tok::Comma; break;
      case ';': t.kind = Tok::Semi; break;
      case '+': t.kind = Tok::Plus; break;
      case '-': t.kind = Tok::Minus; break;
      case '*': t.kind = Tok::Star; break;
      case '/': t.kind = Tok::Slash; break;
      case '%': t.kind = Tok::Percent; break;
      case '^': t.kind = Tok::Caret; break;
      case '=': t.kind = two('=', Tok::Eq, Tok::Assign); break;
      case '!': t.kind = two('=', Tok::Ne, Tok::Bang); break;
      case '<': t.kind = two('=', Tok::Le, Tok::Lt); break;
      case '>': t.kind = two('=', Tok::Ge, Tok::Gt); break;
      case '&':
        if (peek() != '&') fail(t.loc, "expected '&&'");
        advance();
        t.kind = Tok::AndAnd;
        break;
      case '|':
        if (peek() != '|') fail(t.loc, "expected '||'");
        advance();
        t.kind = Tok::OrOr;
        break;
      default: fail(t.loc, std::string("unexpected character '") + c + "'");
    }
    return t;
  }

  static Tok keyword(const std::string& s) {
    static const std::pair<const char*, Tok> table[] = {
        {"int", Tok::KwInt},       {"float", Tok::KwFloat},   {"char", Tok::KwChar},
        {"string", Tok::KwString}, {"bool", Tok::KwBool},     {"void", Tok::KwVoid},
        {"if", Tok::KwIf},         {"else", Tok::KwElse},     {"while", Tok::KwWhile},
        {"return", Tok::KwReturn}, {"print", Tok::KwPrint},   {"true", Tok::KwTrue},
        {"false", Tok::KwFalse},   {"new", Tok::KwNew},
    };
    for (const auto& [word, kind] : table)
      if (s == word) return kind;
    return Tok::Ident;
  }
};

// Recursive-descent parser producing an unresolved Program.
class Parser {
 public:
  explicit Parser(std::string_view src) : toks_(Lexer(src).tokenize()) {}

  Program parse_program() {
    Program p;
    if (at(Tok::End)) fail("expected function declaration");
    while (!at(Tok::End)) {
      if (!is_type_start()) fail("expected function declaration");
      SourceLoc loc = cur().loc;
      Type type = parse_type();
      std::string name = expect_ident("expected name after type");
      if (at(Tok::LParen)) {
        Function f;
        f.return_type = type;
        f.name = name;
        f.loc = loc;
        advance();
        if (!at(Tok::RParen)) {
          do {
            Param param;
            param.loc = cur().loc;
            if (!is_type_start()) fail("expected parameter type");
            param.type = parse_type();
            if (param.type.base == BaseType::Void) fail_at(param.loc, "parameter cannot be void");
            param.name = expect_ident("expected parameter name");
            f.params.push_back(std::move(param));
          } while (accept(Tok::Comma));
        }
        expect(Tok::RParen, "expected ')' after parameters");
        f.body = parse_block();
        p.functions.push_back(std::move(f));
      } else {
        Global g;
        g.loc = loc;
        g.decl.type = type;
        g.decl.name = name;
        if (type.base == BaseType::Void) fail_at(loc, "variable cannot be void");
        if (accept(Tok::Assign)) g.decl.init = parse_expr();
        expect(Tok::Semi, "expected ';' after global declaration");
        p.globals.push_back(std::move(g));
      }
    }
    return p;
  }

  Expr parse_standalone_expr() {
    Expr e = parse_expr();
    if (!at(Tok::End)) fail("unexpected trailing input");
    return e;
  }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;

  const Token& cur() const { return toks_[pos_]; }
  bool at(Tok k) const { return cur().kind == k; }
  const Token& advance() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
  bool accept(Tok k) {
    if (!at(k)) return false;
    advance();
    return true;
  }
  [[noreturn]] void fail(const std::string& msg) const { throw SourceError(cur().loc, msg); }
  [[noreturn]] void fail_at(SourceLoc loc, const std::string& msg) const { throw SourceError(loc, msg); }
  void expect(Tok k, const char* msg) {
    if (!accept(k)) fail(msg);
  }
  std::string expect_ident(const char* msg) {
    if (!at(Tok::Ident)) fail(msg);
    return advance().text;
  }

  bool is_type_start() const {
    switch (cur().kind) {
      case Tok::KwInt: case Tok::KwFloat: case Tok::KwChar: case Tok::KwString: case Tok::KwBool: case Tok::KwVoid:
        return true;
      default:
        return false;
    }
  }

  BaseType parse_base_type() {
    switch (advance().kind) {
      case Tok::KwInt: return BaseType::Int;
      case Tok::KwFloat: return BaseType::Float;
      case Tok::KwChar: return BaseType::Char;
      case Tok::KwString: return BaseType::String;
      case Tok::KwBool: return BaseType::Bool;
      case Tok::KwVoid: return BaseType::Void;
      default: --pos_; fail("expected type");
    }
  }

  Type parse_type() {
    Type t = Type::of(parse_base_type());
    if (at(Tok::LBracket) && toks_[pos_ + 1].kind == Tok::RBracket) {
      if (t.base == BaseType::Void) fail("void arrays are not allowed");
      advance();
      advance();
      t.array = true;
    }
    return t;
  }

  Block parse_block() {
    expect(Tok::LBrace, "expected '{'");
    Block b;
    while (!at(Tok::RBrace)) {
      if (at(Tok::End)) fail("expected '}'");
      b.stmts.push_back(parse_stmt());
    }
    advance();
    return b;
  }

  Stmt parse_stmt() {
    Stmt s;
    s.loc = cur().loc;
    if (is_type_start()) {
      DeclStmt d;
      d.type = parse_type();
      if (d.type.base == BaseType::Void) fail_at(s.loc, "variable cannot be void");
      d.name = expect_ident("expected variable name");
      if (accept(Tok::Assign)) d.init = parse_expr();
      expect(Tok::Semi, "expected ';' after declaration");
      s.node = std::move(d);
    } else if (accept(Tok::KwIf)) {
      s.node = parse_if_rest();
    } else if (accept(Tok::KwWhile)) {
      WhileStmt w;
      expect(Tok::LParen, "expected '(' after 'while'");
      w.cond = parse_expr();
      expect(Tok::RParen, "expected ')' after condition");
      w.body = parse_block();
      s.node = std::move(w);
    } else if (accept(Tok::KwReturn)) {
      ReturnStmt r;
      if (!at(Tok::Semi)) r.value = parse_expr();
      expect(Tok::Semi, "expected ';' after return");
      s.node = std::move(r);
    } else if (accept(Tok::KwPrint)) {
      expect(Tok::LParen, "expected '(' after 'print'");
      PrintStmt pr{parse_expr()};
      expect(Tok::RParen, "expected ')'");
      expect(Tok::Semi, "expected ';' after print");
      s.node = std::move(pr);
    } else {
      Expr e = parse_expr();
      if (accept(Tok::Assign)) {
        if (!e.as<VarExpr>() && !e.as<IndexExpr>()) fail_at(s.loc, "invalid assignment target");
        AssignStmt a{std::move(e), parse_expr()};
        s.node = std::move(a);
      } else {
        if (!e.as<CallExpr>()) fail_at(s.loc, "expression statement must be a call");
        s.node = ExprStmt{std::move(e)};
      }
      expect(Tok::Semi, "expected ';'");
    }
    return s;
  }

  IfStmt parse_if_rest() {
    IfStmt i;
    expect(Tok::LParen, "expected '(' after 'if'");
    i.cond = parse_expr();
    expect(Tok::RParen, "expected ')' after condition");
    i.then_block = parse_block();
    if (accept(Tok::KwElse)) {
      if (at(Tok::KwIf)) {
        Stmt nested;
        nested.loc = cur().loc;
        advance();
        nested.node = parse_if_rest();
        Block b;
        b.stmts.push_back(std::move(nested));
        i.else_block = std::move(b);
      } else {
        i.else_block = parse_block();
      }
    }
    return i;
  }

  Expr parse_expr() { return parse_binary(1); }

  static int binary_prec(Tok k, BinOp& op) {
    switch (k) {
      case Tok::OrOr: op = BinOp::Or; return 1;
      case Tok::AndAnd: op = BinOp::And; return 2;
      case Tok::Caret: op = BinOp::Xor; return 3;
      case Tok::Eq: op = BinOp::Eq; return 4;
      case Tok::Ne: op = BinOp::Ne; return 4;
      case Tok::Lt: op = BinOp::Lt; return 5;
      case Tok::Le: op = BinOp::Le; return 5;
      case Tok::Gt: op = BinOp::Gt; return 5;
      case Tok::Ge: op = BinOp::Ge; return 5;
      case Tok::Plus: op = BinOp::Add; return 6;
      case Tok::Minus: op = BinOp::Sub; return 6;
      case Tok::Star: op = BinOp::Mul; return 7;
      case Tok::Slash: op = BinOp::Div; return 7;
      case Tok::Percent: op = BinOp::Mod; return 7;
      default: return 0;
    }
  }

  // Precedence climbing; all binary operators are left-associative.
  Expr parse_binary(int min_prec) {
    Expr lhs = parse_unary();
    for (;;) {
      BinOp op{};
      int prec = binary_prec(cur().kind, op);
      if (prec == 0 || prec < min_prec) return lhs;
      SourceLoc loc = cur().loc;
      advance();
      Expr rhs = parse_binary(prec + 1);
      Expr e;
      e.loc = loc;
      e.node = BinaryExpr{op, box<Expr>(std::move(lhs)), box<Expr>(std::move(rhs)), -1, {}};
      lhs = std::move(e);
    }
  }

  Expr parse_unary() {
    SourceLoc loc = cur().loc;
    if (at(Tok::Minus)) {
      advance();
      // A minus directly before a numeric literal folds into the literal.
      if (at(Tok::IntLit)) {
        std::uint64_t mag = advance().int_value;
        constexpr std::uint64_t limit = static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()) + 1;
        if (mag > limit) fail_at(loc, "integer literal out of range");
        std::int64_t v = mag == limit ? std::numeric_limits<std::int64_t>::min() : -static_cast<std::int64_t>(mag);
        Expr e;
        e.loc = loc;
        e.node = LiteralExpr{Value(v)};
        return parse_postfix(std::move(e));
      }
      if (at(Tok::FloatLit)) {
        Expr e;
        e.loc = loc;
        e.node = LiteralExpr{Value(-advance().float_value)};
        return parse_postfix(std::move(e));
      }
      Expr e;
      e.loc = loc;
      e.node = UnaryExpr{UnOp::Neg, box<Expr>(parse_unary())};
      return e;
    }
    if (accept(Tok::Bang)) {
      Expr e;
      e.loc = loc;
      e.node = UnaryExpr{UnOp::Not, box<Expr>(parse_unary())};
      return e;
    }
    return parse_postfix(parse_primary());
  }

  Expr parse_postfix(Expr e) {
    while (at(Tok::LBracket)) {
      SourceLoc loc = cur().loc;
      advance();
      Expr idx = parse_expr();
      expect(Tok::RBracket, "expected ']'");
      Expr ix;
      ix.loc = loc;
      ix.node = IndexExpr{box<Expr>(std::move(e)), box<Expr>(std::move(idx))};
      e = std::move(ix);
    }
    return e;
  }

  Expr parse_primary() {
    Expr e;
    e.loc = cur().loc;
    const Token& t = cur();
    switch (t.kind) {
      case Tok::IntLit: {
        if (t.int_value > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()))
          fail("integer literal out of range");
        e.node = LiteralExpr{Value(static_cast<std::int64_t>(t.int_value))};
        advance();
        return e;
      }
      case Tok::FloatLit:
        e.node = LiteralExpr{Value(t.float_value)};
        advance();
        return e;
      case Tok::CharLit:
        e.node = LiteralExpr{Value(t.str_value[0])};
        advance();
        return e;
      case Tok::StringLit:
        e.node = LiteralExpr{Value(t.str_value)};
        advance();
        return e;
      case Tok::KwTrue:
      case Tok::KwFalse:
        e.node = LiteralExpr{Value(t.kind == Tok::KwTrue)};
        advance();
        return e;
      case Tok::Ident: {
        std::string name = advance().text;
        if (accept(Tok::LParen)) {
          CallExpr c;
          c.callee = std::move(name);
          if (!at(Tok::RParen)) {
            do c.args.push_back(parse_expr());
            while (accept(Tok::Comma));
          }
          expect(Tok::RParen, "expected ')' after arguments");
          e.node = std::move(c);
        } else {
          e.node = VarExpr{std::move(name), {}};
        }
        return e;
      }
      case Tok::LParen: {
        advance();
        Expr inner = parse_expr();
        expect(Tok::RParen, "expected ')'");
        inner.parens = true;
        return inner;
      }
      case Tok::LBracket: {
        advance();
        ArrayExpr a;
        if (at(Tok::RBracket)) fail("empty array literal; use new T[0]");
        do a.items.push_back(parse_expr());
        while (accept(Tok::Comma));
        expect(Tok::RBracket, "expected ']'");
        e.node = std::move(a);
        return e;
      }
      case Tok::KwNew: {
        advance();
        NewArrayExpr n;
        n.element = parse_base_type();
        if (n.element == BaseType::Void) fail("void arrays are not allowed");
        expect(Tok::LBracket, "expected '[' after element type");
        n.size = box<Expr>(parse_expr());
        expect(Tok::RBracket, "expected ']'");
        e.node = std::move(n);
        return e;
      }
      default:
        fail("expected expression");
    }
  }
};

}  // namespace flipguard
