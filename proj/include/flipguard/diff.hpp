#pragma once

#include <algorithm>
#include <string>
#include <string_view>
#include <vector>

namespace flipguard {

namespace detail {

inline std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      out.emplace_back(text.substr(start));
      break;
    }
    out.emplace_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return out;
}

}  // namespace detail

// Unified diff (LCS based) with `context` lines around each change. Equal
// inputs give an empty string.
inline std::string unified_diff(std::string_view before, std::string_view after, const std::string& from_name,
                                const std::string& to_name, std::size_t context = 3) {
  auto a = detail::split_lines(before);
  auto b = detail::split_lines(after);
  const std::size_t n = a.size(), m = b.size();
  std::vector<std::vector<std::size_t>> lcs(n + 1, std::vector<std::size_t>(m + 1, 0));
  for (std::size_t i = n; i-- > 0;)
    for (std::size_t j = m; j-- > 0;)
      lcs[i][j] = a[i] == b[j] ? lcs[i + 1][j + 1] + 1 : std::max(lcs[i + 1][j], lcs[i][j + 1]);

  struct Op {
    char tag;  // ' ', '-', '+'
    std::size_t ai, bi;
  };
  std::vector<Op> ops;
  std::size_t i = 0, j = 0;
  while (i < n || j < m) {
    if (i < n && j < m && a[i] == b[j]) {
      ops.push_back({' ', i++, j++});
    } else if (i < n && (j == m || lcs[i + 1][j] >= lcs[i][j + 1])) {
      ops.push_back({'-', i++, j});
    } else {
      ops.push_back({'+', i, j++});
    }
  }
  if (std::all_of(ops.begin(), ops.end(), [](const Op& o) { return o.tag == ' '; })) return {};

  std::string out = "--- " + from_name + "\n+++ " + to_name + "\n";
  std::size_t k = 0;
  while (k < ops.size()) {
    while (k < ops.size() && ops[k].tag == ' ') ++k;
    if (k == ops.size()) break;
    std::size_t start = k >= context ? k - context : 0;
    // Extend the hunk while the gap to the next change is within 2 * context.
    std::size_t end = k;
    for (;;) {
      while (end < ops.size() && ops[end].tag != ' ') ++end;
      std::size_t gap = end;
      while (gap < ops.size() && ops[gap].tag == ' ') ++gap;
      if (gap < ops.size() && gap - end <= 2 * context) {
        end = gap;
        continue;
      }
      end = std::min(ops.size(), end + context);
      break;
    }
    std::size_t a_start = ops[start].ai, b_start = ops[start].bi, a_len = 0, b_len = 0;
    std::string body;
    for (std::size_t x = start; x < end; ++x) {
      const Op& o = ops[x];
      if (o.tag != '+') ++a_len;
      if (o.tag != '-') ++b_len;
      body += o.tag;
      body += o.tag == '+' ? b[o.bi] : a[o.ai];
      body += '\n';
    }
    auto range = [](std::size_t s, std::size_t len) {
      return std::to_string(len == 0 ? s : s + 1) + (len == 1 ? "" : "," + std::to_string(len));
    };
    out += "@@ -" + range(a_start, a_len) + " +" + range(b_start, b_len) + " @@\n" + body;
    k = end;
  }
  return out;
}

}  // namespace flipguard
