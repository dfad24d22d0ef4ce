#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace flipguard {

enum class BaseType { Int, Float, Char, String, Bool, Void };

// Arrays are one level deep: `int[]`, `string[]`, ...
struct Type {
  BaseType base = BaseType::Void;
  bool array = false;

  static constexpr Type of(BaseType b) { return Type{b, false}; }
  static constexpr Type array_of(BaseType b) { return Type{b, true}; }

  constexpr Type element() const { return Type{base, false}; }
  constexpr bool is_numeric() const {
    return !array && (base == BaseType::Int || base == BaseType::Float || base == BaseType::Char);
  }
  constexpr bool is(BaseType b) const { return !array && base == b; }

  friend constexpr bool operator==(const Type&, const Type&) = default;
};

inline std::string base_name(BaseType b) {
  switch (b) {
    case BaseType::Int: return "int";
    case BaseType::Float: return "float";
    case BaseType::Char: return "char";
    case BaseType::String: return "string";
    case BaseType::Bool: return "bool";
    case BaseType::Void: return "void";
  }
  return "?";
}

inline std::string to_string(Type t) { return base_name(t.base) + (t.array ? "[]" : ""); }

struct Value;
using ArrayValue = std::vector<Value>;

// Runtime value. Strings hold code points so that `s[i]` is a char.
struct Value {
  std::variant<std::int64_t, double, char32_t, std::u32string, bool, ArrayValue> data;

  Value() : data(std::int64_t{0}) {}
  Value(std::int64_t v) : data(v) {}
  Value(int v) : data(std::int64_t{v}) {}
  Value(double v) : data(v) {}
  Value(char32_t v) : data(v) {}
  Value(std::u32string v) : data(std::move(v)) {}
  Value(bool v) : data(v) {}
  Value(ArrayValue v) : data(std::move(v)) {}

  bool is_int() const { return std::holds_alternative<std::int64_t>(data); }
  bool is_float() const { return std::holds_alternative<double>(data); }
  bool is_char() const { return std::holds_alternative<char32_t>(data); }
  bool is_string() const { return std::holds_alternative<std::u32string>(data); }
  bool is_bool() const { return std::holds_alternative<bool>(data); }
  bool is_array() const { return std::holds_alternative<ArrayValue>(data); }

  std::int64_t as_int() const { return std::get<std::int64_t>(data); }
  double as_float() const { return std::get<double>(data); }
  char32_t as_char() const { return std::get<char32_t>(data); }
  const std::u32string& as_string() const { return std::get<std::u32string>(data); }
  std::u32string& as_string() { return std::get<std::u32string>(data); }
  bool as_bool() const { return std::get<bool>(data); }
  const ArrayValue& as_array() const { return std::get<ArrayValue>(data); }
  ArrayValue& as_array() { return std::get<ArrayValue>(data); }

  // int and char widen to double; everything else is a type error upstream.
  double numeric() const {
    if (is_int()) return static_cast<double>(as_int());
    if (is_char()) return static_cast<double>(as_char());
    if (is_float()) return as_float();
    if (is_bool()) return as_bool() ? 1.0 : 0.0;
    throw std::logic_error("numeric() on non-numeric value");
  }

  friend bool operator==(const Value& a, const Value& b) { return a.data == b.data; }
};

inline Value default_value(Type t) {
  if (t.array) return Value(ArrayValue{});
  switch (t.base) {
    case BaseType::Int: return Value(std::int64_t{0});
    case BaseType::Float: return Value(0.0);
    case BaseType::Char: return Value(char32_t{0});
    case BaseType::String: return Value(std::u32string{});
    case BaseType::Bool: return Value(false);
    case BaseType::Void: break;
  }
  return Value{};
}

inline void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

inline std::string to_utf8(std::u32string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t c : s) append_utf8(out, c);
  return out;
}

// Lenient decoder: invalid sequences map to U+FFFD.
inline std::u32string from_utf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    auto b = static_cast<unsigned char>(s[i]);
    int extra = 0;
    char32_t cp = 0;
    if (b < 0x80) { cp = b; }
    else if ((b >> 5) == 0x6) { cp = b & 0x1F; extra = 1; }
    else if ((b >> 4) == 0xE) { cp = b & 0x0F; extra = 2; }
    else if ((b >> 3) == 0x1E) { cp = b & 0x07; extra = 3; }
    else { out.push_back(0xFFFD); ++i; continue; }
    bool ok = true;
    for (int k = 1; k <= extra; ++k) {
      if (i + k >= s.size()) { ok = false; break; }
      auto c = static_cast<unsigned char>(s[i + k]);
      if ((c >> 6) != 0x2) { ok = false; break; }
      cp = (cp << 6) | (c & 0x3F);
    }
    if (!ok) { out.push_back(0xFFFD); ++i; continue; }
    out.push_back(cp);
    i += static_cast<std::size_t>(extra) + 1;
  }
  return out;
}

// Shortest round-trip decimal; integral values keep a trailing ".0" so the
// text re-lexes as a float literal.
inline std::string format_float(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

// Text produced by print() and string concatenation.
inline void append_display(std::string& out, const Value& v) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::int64_t>) out += std::to_string(x);
        else if constexpr (std::is_same_v<T, double>) out += format_float(x);
        else if constexpr (std::is_same_v<T, char32_t>) append_utf8(out, x);
        else if constexpr (std::is_same_v<T, std::u32string>) out += to_utf8(x);
        else if constexpr (std::is_same_v<T, bool>) out += x ? "true" : "false";
        else {
          out += '[';
          for (std::size_t i = 0; i < x.size(); ++i) {
            if (i) out += ", ";
            append_display(out, x[i]);
          }
          out += ']';
        }
      },
      v.data);
}

// Concatenation operand appended in place; equals from_utf8(display(v)).
inline void append_text(std::u32string& out, const Value& v) {
  if (v.is_string()) out += v.as_string();
  else if (v.is_char()) out += v.as_char();
  else {
    std::string text;
    append_display(text, v);
    out += from_utf8(text);
  }
}

inline std::string display(const Value& v) {
  std::string out;
  append_display(out, v);
  return out;
}

// 32-bit wrapping polynomial hash: h = sum c_i * 31^(n-1-i). Scalars hash to
// their value truncated to 32 bits, floats to their bit pattern folded to 32
// bits, arrays fold their element hashes. The result is read as signed.
inline std::int32_t value_hash(const Value& v) {
  auto as_signed = [](std::uint32_t h) { return static_cast<std::int32_t>(h); };
  if (v.is_int()) return as_signed(static_cast<std::uint32_t>(static_cast<std::uint64_t>(v.as_int())));
  if (v.is_char()) return as_signed(static_cast<std::uint32_t>(v.as_char()));
  if (v.is_bool()) return v.as_bool() ? 1 : 0;
  if (v.is_float()) {
    std::uint64_t bits;
    double d = v.as_float();
    std::memcpy(&bits, &d, sizeof bits);
    return as_signed(static_cast<std::uint32_t>(bits ^ (bits >> 32)));
  }
  std::uint32_t h = 0;
  if (v.is_string()) {
    for (char32_t c : v.as_string()) h = 31u * h + static_cast<std::uint32_t>(c);
  } else {
    for (const Value& e : v.as_array()) h = 31u * h + static_cast<std::uint32_t>(value_hash(e));
  }
  return as_signed(h);
}

}  // namespace flipguard
