#pragma once

#include <algorithm>
#include <string_view>
#include <vector>

#include "cohort/text.hpp"

namespace cohort {

// Unit-cost Levenshtein distance over codepoints, two-row DP.
inline size_t edit_distance(const std::vector<char32_t>& a, const std::vector<char32_t>& b) {
  const auto& s = a.size() <= b.size() ? a : b;
  const auto& t = a.size() <= b.size() ? b : a;
  std::vector<size_t> prev(s.size() + 1), cur(s.size() + 1);
  for (size_t j = 0; j <= s.size(); ++j) prev[j] = j;
  for (size_t i = 1; i <= t.size(); ++i) {
    cur[0] = i;
    for (size_t j = 1; j <= s.size(); ++j) {
      size_t sub = prev[j - 1] + (t[i - 1] == s[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[s.size()];
}

inline size_t edit_distance(std::string_view a, std::string_view b) {
  return edit_distance(text::decode_utf8(a), text::decode_utf8(b));
}

// Similarity in [0,1]: 1 - d/max(|a|,|b|) over codepoint counts. Two empty
// strings are identical by convention.
inline double levenshtein_similarity(std::string_view a, std::string_view b) {
  auto ca = text::decode_utf8(a);
  auto cb = text::decode_utf8(b);
  size_t longest = std::max(ca.size(), cb.size());
  if (longest == 0) return 1.0;
  return 1.0 - double(edit_distance(ca, cb)) / double(longest);
}

}  // namespace cohort
