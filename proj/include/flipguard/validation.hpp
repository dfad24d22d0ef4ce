#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "flipguard/interp.hpp"
#include "flipguard/test_suite.hpp"

namespace flipguard {

// Sampling range for one parameter of `main`. Numbers are drawn from
// [min, max]; floats in steps of 10^-decimals. Chars, strings and array
// elements of type char/string use `alphabet` when it is non-empty.
struct ParamRange {
  double min = -100;
  double max = 100;
  int decimals = 2;
  std::u32string alphabet;
  std::size_t min_len = 0;  // strings and arrays
  std::size_t max_len = 8;
};

struct GenConfig {
  std::size_t n = 1000;
  std::uint64_t seed = 1;
  std::map<std::string, ParamRange> params;  // by parameter name
  std::size_t retries = 100;                 // per test, for inputs the reference rejects
};

namespace detail {

class InputSampler {
 public:
  explicit InputSampler(std::uint64_t seed) : rng_(seed) {}

  // Uniform-ish integer in [lo, hi] by raw modulo, so the stream is
  // identical on every standard library.
  std::int64_t integer(std::int64_t lo, std::int64_t hi) {
    if (hi <= lo) return lo;
    auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    std::uint64_t r = rng_();
    return lo + static_cast<std::int64_t>(span == 0 ? r : r % span);
  }

  Value scalar(BaseType b, const ParamRange& r) {
    switch (b) {
      case BaseType::Int: return Value(integer(static_cast<std::int64_t>(r.min), static_cast<std::int64_t>(r.max)));
      case BaseType::Float: {
        double scale = 1;
        for (int i = 0; i < r.decimals; ++i) scale *= 10;
        auto k = integer(static_cast<std::int64_t>(r.min * scale), static_cast<std::int64_t>(r.max * scale));
        return Value(static_cast<double>(k) / scale);
      }
      case BaseType::Char: return Value(character(r));
      case BaseType::String: {
        std::u32string s;
        auto len = integer(static_cast<std::int64_t>(r.min_len), static_cast<std::int64_t>(r.max_len));
        for (std::int64_t i = 0; i < len; ++i) s.push_back(character(r));
        return Value(std::move(s));
      }
      case BaseType::Bool: return Value(integer(0, 1) == 1);
      case BaseType::Void: break;
    }
    return Value(false);
  }

  Value value(Type t, const ParamRange& r) {
    if (!t.array) return scalar(t.base, r);
    ArrayValue items;
    auto len = integer(static_cast<std::int64_t>(r.min_len), static_cast<std::int64_t>(r.max_len));
    for (std::int64_t i = 0; i < len; ++i) items.push_back(scalar(t.base, r));
    return Value(std::move(items));
  }

 private:
  std::mt19937_64 rng_;

  char32_t character(const ParamRange& r) {
    if (!r.alphabet.empty())
      return r.alphabet[static_cast<std::size_t>(integer(0, static_cast<std::int64_t>(r.alphabet.size()) - 1))];
    return static_cast<char32_t>(integer(U'a', U'z'));
  }
};

}  // namespace detail

inline ParamRange default_range(Type t) {
  ParamRange r;
  if (t.base == BaseType::Char || t.base == BaseType::String) r.alphabet = U"abcdefghijklmnopqrstuvwxyz";
  return r;
}

struct GeneratedSuite {
  TestSuite suite;
  std::size_t discarded = 0;  // inputs on which the reference faulted
  std::vector<std::string> warnings;
};

// Random inputs for `main`, labelled with the reference program's output.
// Inputs on which the reference faults are redrawn, up to `retries` times.
inline GeneratedSuite gen_validation(const Program& reference, const GenConfig& cfg,
                                     std::int64_t budget = kDefaultStepBudget) {
  GeneratedSuite out;
  if (cfg.n == 0) out.warnings.push_back("validation suite is empty (n = 0)");
  detail::InputSampler sampler(cfg.seed);
  const Function& entry = reference.main();
  std::size_t width = std::to_string(cfg.n).size();
  for (std::size_t i = 0; i < cfg.n; ++i) {
    std::string index = std::to_string(i + 1);
    TestCase tc;
    tc.name = "v" + std::string(width - index.size(), '0') + index;
    bool accepted = false;
    for (std::size_t attempt = 0; attempt <= cfg.retries && !accepted; ++attempt) {
      tc.args.clear();
      for (const auto& param : entry.params) {
        auto it = cfg.params.find(param.name);
        tc.args.push_back(sampler.value(param.type, it == cfg.params.end() ? default_range(param.type) : it->second));
      }
      RunResult r = run(reference, tc, Controller::none(), budget);
      if (r.abort_reason == AbortReason::None) {
        tc.expected_output = normalize_output(r.output);
        accepted = true;
      } else {
        ++out.discarded;
      }
    }
    if (!accepted) {
      out.warnings.push_back("gave up on input " + tc.name + " after " + std::to_string(cfg.retries) + " retries");
      continue;
    }
    out.suite.tests.push_back(std::move(tc));
  }
  return out;
}

}  // namespace flipguard
