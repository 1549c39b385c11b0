#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cohort {

enum class errc {
  parse_error,
  missing_mandatory_field,
  duplicate_mapping,
  header_mismatch,
  unmapped_id,
  invalid_config,
  zero_marginal,
  degenerate_table,
  constant_predictor,
  spec_mismatch,
  single_class,
  too_few_records,
  missing_input,
  frozen_output,
  stage_failure,
  io_error,
};

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::parse_error: return "ParseError";
    case errc::missing_mandatory_field: return "MissingMandatoryField";
    case errc::duplicate_mapping: return "DuplicateMapping";
    case errc::header_mismatch: return "HeaderMismatch";
    case errc::unmapped_id: return "UnmappedId";
    case errc::invalid_config: return "InvalidConfig";
    case errc::zero_marginal: return "ZeroMarginal";
    case errc::degenerate_table: return "DegenerateTable";
    case errc::constant_predictor: return "ConstantPredictor";
    case errc::spec_mismatch: return "SpecMismatch";
    case errc::single_class: return "SingleClass";
    case errc::too_few_records: return "TooFewRecords";
    case errc::missing_input: return "MissingInput";
    case errc::frozen_output: return "FrozenOutput";
    case errc::stage_failure: return "StageFailure";
    case errc::io_error: return "IoError";
  }
  return "UnknownError";
}

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& msg)
      : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}
  errc code() const { return code_; }

 private:
  errc code_;
};

// Calendar date with no time component; comparable by (y, m, d).
struct Date {
  int year = 0;
  int month = 0;
  int day = 0;
  friend auto operator<=>(const Date&, const Date&) = default;
};

inline bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

inline bool valid_date(int y, int m, int d) {
  static const int mdays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (y < 1 || m < 1 || m > 12 || d < 1) return false;
  int lim = mdays[m - 1];
  if (m == 2 && is_leap(y)) lim = 29;
  return d <= lim;
}

// Parses against an ordered format list. Supported format tokens: Y, M, D
// separated by '-' or '/'. First format that fully matches wins.
inline std::optional<Date> parse_date(std::string_view s,
                                      const std::vector<std::string>& formats = {
                                          "Y-M-D", "D/M/Y", "Y/M/D", "D-M-Y"}) {
  auto split = [](std::string_view v, char sep) {
    std::vector<std::string_view> out;
    size_t pos = 0;
    while (true) {
      size_t next = v.find(sep, pos);
      if (next == std::string_view::npos) {
        out.push_back(v.substr(pos));
        break;
      }
      out.push_back(v.substr(pos, next - pos));
      pos = next + 1;
    }
    return out;
  };
  auto to_int = [](std::string_view v, int& out) {
    if (v.empty() || v.size() > 4) return false;
    int acc = 0;
    for (char c : v) {
      if (c < '0' || c > '9') return false;
      acc = acc * 10 + (c - '0');
    }
    out = acc;
    return true;
  };
  for (const auto& fmt : formats) {
    char sep = fmt.find('/') != std::string::npos ? '/' : '-';
    if (s.find(sep) == std::string_view::npos) continue;
    auto fparts = split(fmt, sep);
    auto sparts = split(s, sep);
    if (fparts.size() != 3 || sparts.size() != 3) continue;
    int y = 0, m = 0, d = 0;
    bool ok = true;
    for (size_t i = 0; i < 3 && ok; ++i) {
      int val = 0;
      ok = to_int(sparts[i], val);
      if (!ok) break;
      switch (fparts[i][0]) {
        case 'Y': y = val; ok = sparts[i].size() == 4; break;
        case 'M': m = val; break;
        case 'D': d = val; break;
        default: ok = false;
      }
    }
    if (ok && valid_date(y, m, d)) return Date{y, m, d};
  }
  return std::nullopt;
}

inline std::string trim(std::string_view s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  size_t e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = char(c - 'A' + 'a');
  return out;
}

// A cell is "absent" at the typed level when empty after trim or one of the
// literal missing markers. Raw bytes are always retained alongside.
inline bool is_missing_marker(std::string_view raw) {
  std::string t = ascii_lower(trim(raw));
  return t.empty() || t == "nan" || t == "null";
}

inline std::optional<int> parse_int(std::string_view s) {
  std::string t = trim(s);
  if (t.empty()) return std::nullopt;
  size_t i = (t[0] == '-' || t[0] == '+') ? 1 : 0;
  if (i == t.size()) return std::nullopt;
  long long acc = 0;
  for (; i < t.size(); ++i) {
    if (t[i] < '0' || t[i] > '9') return std::nullopt;
    acc = acc * 10 + (t[i] - '0');
    if (acc > 2147483647LL) return std::nullopt;
  }
  return int(t[0] == '-' ? -acc : acc);
}

}  // namespace cohort
