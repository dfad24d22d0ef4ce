#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "flipguard/interp.hpp"

namespace flipguard {

// Canonical order; used for tie-breaking and serialization.
enum class Pattern { All, First, Last, AllFirst, AllLast, AllFirstLast, FirstPlus1, LastMinus1, FirstLast, Odd, Even };

inline constexpr std::array<Pattern, 11> kAllPatterns = {
    Pattern::All,        Pattern::First,      Pattern::Last,      Pattern::AllFirst,
    Pattern::AllLast,    Pattern::AllFirstLast, Pattern::FirstPlus1, Pattern::LastMinus1,
    Pattern::FirstLast,  Pattern::Odd,        Pattern::Even};

inline const char* pattern_name(Pattern p) {
  switch (p) {
    case Pattern::All: return "all";
    case Pattern::First: return "first";
    case Pattern::Last: return "last";
    case Pattern::AllFirst: return "all-first";
    case Pattern::AllLast: return "all-last";
    case Pattern::AllFirstLast: return "all-(first+last)";
    case Pattern::FirstPlus1: return "first+1";
    case Pattern::LastMinus1: return "last-1";
    case Pattern::FirstLast: return "first+last";
    case Pattern::Odd: return "odd";
    case Pattern::Even: return "even";
  }
  return "?";
}

inline std::optional<Pattern> pattern_named(std::string_view name) {
  for (Pattern p : kAllPatterns)
    if (name == pattern_name(p)) return p;
  return std::nullopt;
}

inline int pattern_rank(Pattern p) { return static_cast<int>(p); }

// Patterns whose instance set depends on the total execution count.
inline bool last_anchored(Pattern p) {
  return p == Pattern::Last || p == Pattern::AllLast || p == Pattern::AllFirstLast || p == Pattern::LastMinus1 ||
         p == Pattern::FirstLast;
}

// 1-based instances of n executions to negate; out-of-range indices drop.
inline std::set<std::int64_t> instances_to_negate(Pattern p, std::int64_t n) {
  std::set<std::int64_t> s;
  auto range = [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i <= hi; ++i) s.insert(i);
  };
  auto single = [&](std::int64_t i) {
    if (i >= 1 && i <= n) s.insert(i);
  };
  switch (p) {
    case Pattern::All: range(1, n); break;
    case Pattern::First: single(1); break;
    case Pattern::Last: single(n); break;
    case Pattern::AllFirst: range(2, n); break;
    case Pattern::AllLast: range(1, n - 1); break;
    case Pattern::AllFirstLast: range(2, n - 1); break;
    case Pattern::FirstPlus1: single(2); break;
    case Pattern::LastMinus1: single(n - 1); break;
    case Pattern::FirstLast: single(1); single(n); break;
    case Pattern::Odd:
      for (std::int64_t i = 1; i <= n; i += 2) s.insert(i);
      break;
    case Pattern::Even:
      for (std::int64_t i = 2; i <= n; i += 2) s.insert(i);
      break;
  }
  return s;
}

// The instance set a negated run applies. Patterns anchored at the start
// are applied by index as executions happen, so they keep their meaning when
// negation changes how often the site runs; the others are fixed from the
// count of an unmodified run.
inline InstanceSet negation_plan(Pattern p, std::int64_t counted) {
  using R = InstanceSet::Rule;
  switch (p) {
    case Pattern::All: return InstanceSet::rule_of(R::All);
    case Pattern::AllFirst: return InstanceSet::rule_of(R::FromSecond);
    case Pattern::Odd: return InstanceSet::rule_of(R::Odd);
    case Pattern::Even: return InstanceSet::rule_of(R::Even);
    case Pattern::First: return InstanceSet::of({1});
    case Pattern::FirstPlus1: return InstanceSet::of({2});
    default: return InstanceSet::of(instances_to_negate(p, counted));
  }
}

}  // namespace flipguard
