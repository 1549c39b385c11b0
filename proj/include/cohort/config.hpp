#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cohort/common.hpp"
#include "cohort/records.hpp"

namespace cohort {

// Minimal two-level "section: / key: value" document, order-preserving and
// tolerant of repeated keys (needed for auxiliary_text).
struct KvDocument {
  struct Entry {
    std::string section;
    std::string key;
    std::string value;
  };
  std::vector<Entry> entries;

  std::vector<const Entry*> in_section(std::string_view section) const {
    std::vector<const Entry*> out;
    for (const auto& e : entries)
      if (e.section == section) out.push_back(&e);
    return out;
  }
  std::optional<std::string> value(std::string_view section, std::string_view key) const {
    for (const auto& e : entries)
      if (e.section == section && e.key == key) return e.value;
    return std::nullopt;
  }
};

inline KvDocument parse_kv_document(std::istream& in, const std::string& origin) {
  KvDocument doc;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    size_t hash = line.find('#');
    std::string body = hash == std::string::npos ? line : line.substr(0, hash);
    if (trim(body).empty()) continue;
    bool indented = body[0] == ' ' || body[0] == '\t';
    size_t colon = body.find(':');
    if (colon == std::string::npos)
      throw Error(errc::parse_error,
                  origin + ":" + std::to_string(lineno) + ": expected 'key: value'");
    std::string key = trim(body.substr(0, colon));
    std::string value = trim(body.substr(colon + 1));
    // strip optional quotes around values such as ","
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    if (!indented && value.empty()) {
      section = key;
    } else if (!indented) {
      doc.entries.push_back({"", key, value});
    } else {
      if (section.empty())
        throw Error(errc::parse_error,
                    origin + ":" + std::to_string(lineno) + ": indented entry outside a section");
      doc.entries.push_back({section, key, value});
    }
  }
  return doc;
}

inline KvDocument load_kv_document(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(errc::io_error, "cannot open " + path);
  return parse_kv_document(in, path);
}

struct FieldMapping {
  std::string logical_field;  // vocabulary name, or "auxiliary_text"
  std::string source_column;
  bool required = false;
};

struct IngestConfig {
  std::vector<FieldMapping> mappings;
  char delimiter = ',';
  std::vector<std::string> date_formats = {"Y-M-D", "D/M/Y", "Y/M/D", "D-M-Y"};

  std::optional<std::string> source_column(Field f) const {
    for (const auto& m : mappings)
      if (m.logical_field == field_name(f)) return m.source_column;
    return std::nullopt;
  }
  std::vector<std::string> auxiliary_columns() const {
    std::vector<std::string> out;
    for (const auto& m : mappings)
      if (m.logical_field == "auxiliary_text") out.push_back(m.source_column);
    return out;
  }
};

// Validates the `fields:` section: person_id mandatory, every logical field
// mapped at most once (auxiliary_text excepted), unknown names rejected.
inline IngestConfig load_config(const std::string& path) {
  KvDocument doc = load_kv_document(path);
  IngestConfig cfg;
  bool has_person_id = false;
  for (const auto* e : doc.in_section("fields")) {
    if (e->key != "auxiliary_text" && !field_from_name(e->key))
      throw Error(errc::parse_error, "unknown logical field '" + e->key + "'");
    for (const auto& m : cfg.mappings)
      if (m.logical_field == e->key && e->key != "auxiliary_text")
        throw Error(errc::duplicate_mapping, "logical field '" + e->key + "' mapped twice");
    if (e->value.empty())
      throw Error(errc::parse_error, "empty source column for '" + e->key + "'");
    cfg.mappings.push_back({e->key, e->value, e->key == "person_id"});
    if (e->key == "person_id") has_person_id = true;
  }
  if (!has_person_id)
    throw Error(errc::missing_mandatory_field, "config does not map person_id");
  if (auto d = doc.value("options", "delimiter")) {
    if (d->size() != 1)
      throw Error(errc::parse_error, "delimiter must be a single character");
    cfg.delimiter = (*d)[0];
  }
  if (auto f = doc.value("options", "date_formats")) {
    cfg.date_formats.clear();
    std::string cur;
    for (char c : *f + std::string(",")) {
      if (c == ',') {
        std::string t = trim(cur);
        if (!t.empty()) cfg.date_formats.push_back(t);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    if (cfg.date_formats.empty())
      throw Error(errc::parse_error, "date_formats option is empty");
  }
  return cfg;
}

}  // namespace cohort
