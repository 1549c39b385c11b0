#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cohort/common.hpp"

namespace cohort::csv {

// RFC-4180 style field splitting with configurable delimiter. Returns false
// on unbalanced quotes.
inline bool split_line(std::string_view line, char delim, std::vector<std::string>& out) {
  out.clear();
  std::string field;
  bool in_quotes = false;
  size_t i = 0;
  while (i < line.size()) {
    char c = line[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"' && field.empty()) {
      in_quotes = true;
    } else if (c == delim) {
      out.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
    ++i;
  }
  if (in_quotes) return false;
  out.push_back(std::move(field));
  return true;
}

inline std::string quote(std::string_view field, char delim = ',') {
  bool needs = field.find_first_of("\"\r\n") != std::string_view::npos ||
               field.find(delim) != std::string_view::npos;
  if (!needs) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

inline std::string join_row(const std::vector<std::string>& fields, char delim = ',') {
  std::string out;
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(delim);
    out += quote(fields[i], delim);
  }
  return out;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(std::string_view name) const {
    for (size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return int(i);
    return -1;
  }
  int column_or_throw(std::string_view name) const {
    int i = column(name);
    if (i < 0) throw Error(errc::header_mismatch, "missing column '" + std::string(name) + "'");
    return i;
  }
};

// Reads a whole CSV file. Quoted fields may contain embedded newlines.
inline Table read_file(const std::string& path, char delim = ',') {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(errc::io_error, "cannot open " + path);
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  Table t;
  std::vector<std::string> fields;
  std::string line;
  size_t pos = 0;
  bool have_header = false;
  while (pos <= content.size()) {
    if (pos == content.size()) {
      if (line.empty()) break;
    }
    // accumulate one logical line (respecting quoted newlines)
    size_t eol = content.find('\n', pos);
    std::string_view piece =
        eol == std::string::npos ? std::string_view(content).substr(pos)
                                 : std::string_view(content).substr(pos, eol - pos);
    if (!piece.empty() && piece.back() == '\r') piece.remove_suffix(1);
    if (!line.empty()) line += "\n";
    line += piece;
    pos = eol == std::string::npos ? content.size() + 1 : eol + 1;

    // a logical line is complete when quotes balance
    size_t quotes = 0;
    for (char c : line)
      if (c == '"') ++quotes;
    if (quotes % 2 != 0) continue;

    if (!line.empty() || have_header) {
      if (line.empty()) {
        line.clear();
        continue;  // skip blank data lines
      }
      if (!split_line(line, delim, fields))
        throw Error(errc::parse_error, "unbalanced quotes in " + path);
      if (!have_header) {
        t.header = fields;
        have_header = true;
      } else {
        t.rows.push_back(fields);
      }
    }
    line.clear();
  }
  return t;
}

class Writer {
 public:
  Writer(const std::string& path, char delim = ',') : out_(path, std::ios::binary), delim_(delim) {
    if (!out_) throw Error(errc::io_error, "cannot write " + path);
  }
  void row(const std::vector<std::string>& fields) { out_ << join_row(fields, delim_) << "\n"; }

 private:
  std::ofstream out_;
  char delim_;
};

inline void write_file(const std::string& path, const Table& t, char delim = ',') {
  Writer w(path, delim);
  w.row(t.header);
  for (const auto& r : t.rows) w.row(r);
}

}  // namespace cohort::csv
