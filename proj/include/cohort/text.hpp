#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "cohort/common.hpp"

namespace cohort::text {

// Decodes UTF-8 to codepoints. Invalid sequences are replaced by U+FFFD and
// reported through *replacements so callers can log them.
inline std::vector<char32_t> decode_utf8(std::string_view s, int* replacements = nullptr) {
  std::vector<char32_t> out;
  out.reserve(s.size());
  size_t i = 0;
  auto bad = [&] {
    out.push_back(0xFFFD);
    if (replacements) ++*replacements;
  };
  while (i < s.size()) {
    unsigned char c = s[i];
    if (c < 0x80) {
      out.push_back(c);
      ++i;
    } else if ((c >> 5) == 0x6 && i + 1 < s.size() && (s[i + 1] & 0xC0) == 0x80) {
      char32_t cp = (char32_t(c & 0x1F) << 6) | (s[i + 1] & 0x3F);
      if (cp < 0x80) bad(); else out.push_back(cp);
      i += 2;
    } else if ((c >> 4) == 0xE && i + 2 < s.size() && (s[i + 1] & 0xC0) == 0x80 &&
               (s[i + 2] & 0xC0) == 0x80) {
      char32_t cp = (char32_t(c & 0x0F) << 12) | (char32_t(s[i + 1] & 0x3F) << 6) | (s[i + 2] & 0x3F);
      if (cp < 0x800) bad(); else out.push_back(cp);
      i += 3;
    } else if ((c >> 3) == 0x1E && i + 3 < s.size() && (s[i + 1] & 0xC0) == 0x80 &&
               (s[i + 2] & 0xC0) == 0x80 && (s[i + 3] & 0xC0) == 0x80) {
      char32_t cp = (char32_t(c & 0x07) << 18) | (char32_t(s[i + 1] & 0x3F) << 12) |
                    (char32_t(s[i + 2] & 0x3F) << 6) | (s[i + 3] & 0x3F);
      if (cp < 0x10000 || cp > 0x10FFFF) bad(); else out.push_back(cp);
      i += 4;
    } else {
      bad();
      ++i;
    }
  }
  return out;
}

inline void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(char(cp));
  } else if (cp < 0x800) {
    out.push_back(char(0xC0 | (cp >> 6)));
    out.push_back(char(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(char(0xE0 | (cp >> 12)));
    out.push_back(char(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(char(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(char(0xF0 | (cp >> 18)));
    out.push_back(char(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(char(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(char(0x80 | (cp & 0x3F)));
  }
}

inline std::string encode_utf8(const std::vector<char32_t>& cps) {
  std::string out;
  out.reserve(cps.size());
  for (char32_t cp : cps) append_utf8(out, cp);
  return out;
}

// Accent folding for the Latin-1 Supplement and Latin Extended-A ranges,
// which cover the Spanish/Portuguese/Italian material seen in the register.
// Equivalent to canonical decomposition followed by stripping combining
// marks, restricted to those blocks. Returns 0 when the codepoint should be
// dropped, the codepoint itself when no fold applies.
inline char32_t fold_accent(char32_t cp) {
  // combining diacritical marks (already-decomposed input)
  if (cp >= 0x0300 && cp <= 0x036F) return 0;
  struct Range { char32_t lo, hi; char base; };
  static const Range ranges[] = {
      {0xC0, 0xC5, 'a'}, {0xC8, 0xCB, 'e'}, {0xCC, 0xCF, 'i'},
      {0xD2, 0xD6, 'o'}, {0xD9, 0xDC, 'u'},
      {0xE0, 0xE5, 'a'}, {0xE8, 0xEB, 'e'}, {0xEC, 0xEF, 'i'},
      {0xF2, 0xF6, 'o'}, {0xF9, 0xFC, 'u'},
  };
  for (const auto& r : ranges)
    if (cp >= r.lo && cp <= r.hi) return char32_t(r.base);
  switch (cp) {
    case 0xC7: case 0xE7: return 'c';            // Ç ç
    case 0xD1: case 0xF1: return 'n';            // Ñ ñ
    case 0xDD: case 0xFD: case 0xFF: return 'y'; // Ý ý ÿ
  }
  // Latin Extended-A, folded to the undecorated base letter.
  if (cp >= 0x0100 && cp <= 0x017F) {
    static const char ext_a[129] =
        "aaaaaaccccccccddddeeeeeeeeeegggggggghhhhiiiiiiiiiiiijjkkklllllll"
        "lllnnnnnnnnnoooooooorrrrrrssssssssttttttuuuuuuuuuuuuwwyyyzzzzzzs";
    return char32_t(ext_a[cp - 0x0100]);
  }
  return cp;
}

inline bool is_space_cp(char32_t cp) {
  return cp == ' ' || cp == '\t' || cp == '\r' || cp == '\n' || cp == 0xA0 || cp == 0x0C || cp == 0x0B;
}

// Deterministic standardisation applied to every free-text censal field:
// accent folding, lower-casing, whitespace collapse, trim. Idempotent.
inline std::string clean_text(std::string_view s) {
  auto cps = decode_utf8(s);
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  bool any = false;
  for (char32_t cp : cps) {
    char32_t f = fold_accent(cp);
    if (f == 0) continue;
    if (f >= 'A' && f <= 'Z') f = f - 'A' + 'a';
    if (is_space_cp(f)) {
      pending_space = any;
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    append_utf8(out, f);
    any = true;
  }
  return out;
}

inline std::vector<std::string> tokenize(std::string_view cleaned) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char c : cleaned) {
    if (c == ' ') {
      if (!cur.empty()) tokens.push_back(std::move(cur)), cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

// Strips '.' so that "e.p.e.t." and "epet" compare equal, and trailing
// punctuation so that "esc." matches the stopword "esc".
inline std::string fold_dots(std::string_view token) {
  std::string out;
  for (char c : token)
    if (c != '.') out.push_back(c);
  return out;
}

inline const std::vector<std::string>& default_stopwords() {
  static const std::vector<std::string> words = {
      "esc", "escuela", "colegio", "instituto", "inst", "col"};
  return words;
}

// Removes tokens whose dot-stripped form is in the stopword list. Used only
// for school-name identity matching; type classification sees the full name.
inline std::string remove_stopwords(std::string_view cleaned,
                                    const std::vector<std::string>& stopwords = default_stopwords()) {
  std::unordered_set<std::string> stop;
  for (const auto& w : stopwords) stop.insert(fold_dots(w));
  std::string out;
  for (const auto& tok : tokenize(cleaned)) {
    if (stop.count(fold_dots(tok))) continue;
    if (!out.empty()) out.push_back(' ');
    out += tok;
  }
  return out;
}

}  // namespace cohort::text
