#pragma once

#include <string>
#include <vector>

#include "cohort/config.hpp"
#include "cohort/csv.hpp"
#include "cohort/records.hpp"
#include "cohort/text.hpp"

namespace cohort {

struct RejectedRow {
  size_t row_number = 0;  // 1-based data-row number
  std::string reason;
  std::string raw_line;
};

struct IngestResult {
  std::vector<RawStudentRecord> records;
  std::vector<RejectedRow> rejects;
  std::vector<std::string> warnings;
};

// Loads the delimited extract into raw records, in file order, byte-for-byte.
// Malformed rows are quarantined, never silently dropped:
// |records| + |rejects| = data-row count of the input.
inline IngestResult ingest_raw(const std::string& path, const IngestConfig& cfg) {
  csv::Table table = csv::read_file(path, cfg.delimiter);
  IngestResult out;

  std::vector<int> field_cols(kFieldCount, -1);
  for (int i = 0; i < kFieldCount; ++i) {
    if (auto col = cfg.source_column(Field(i))) {
      int idx = table.column(*col);
      if (idx < 0)
        throw Error(errc::header_mismatch, "mapped column '" + *col + "' not in header of " + path);
      field_cols[i] = idx;
    }
  }
  std::vector<int> aux_cols;
  for (const auto& col : cfg.auxiliary_columns()) {
    int idx = table.column(col);
    if (idx < 0)
      throw Error(errc::header_mismatch, "mapped column '" + col + "' not in header of " + path);
    aux_cols.push_back(idx);
  }

  for (size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (row.size() != table.header.size()) {
      out.rejects.push_back({r + 1,
                             "MalformedRow: expected " + std::to_string(table.header.size()) +
                                 " fields, got " + std::to_string(row.size()),
                             csv::join_row(row, cfg.delimiter)});
      continue;
    }
    RawStudentRecord rec;
    rec.row_index = r;
    rec.date_formats = cfg.date_formats;
    for (int i = 0; i < kFieldCount; ++i)
      if (field_cols[i] >= 0) rec.raw[i] = row[field_cols[i]];
    for (int idx : aux_cols) rec.auxiliary_texts.push_back(row[idx]);

    if (rec.get(Field::person_id).empty()) {
      out.rejects.push_back({r + 1, "MalformedRow: empty person_id", csv::join_row(row, cfg.delimiter)});
      continue;
    }
    // lenient typing: unparseable dates stay absent, the row is kept
    if (rec.present(Field::birth_date) && !rec.birth_date())
      out.warnings.push_back("row " + std::to_string(r + 1) + ": unparseable birth_date '" +
                             rec.get(Field::birth_date) + "'");
    if (rec.present(Field::intake_date) && !rec.intake_date())
      out.warnings.push_back("row " + std::to_string(r + 1) + ": unparseable intake_date '" +
                             rec.get(Field::intake_date) + "'");
    for (int i = 0; i < kFieldCount; ++i) {
      int repl = 0;
      text::decode_utf8(rec.raw[i], &repl);
      if (repl > 0)
        out.warnings.push_back("row " + std::to_string(r + 1) + ", " +
                               std::string(field_name(Field(i))) + ": " + std::to_string(repl) +
                               " invalid UTF-8 sequence(s) replaced");
    }
    out.records.push_back(std::move(rec));
  }
  return out;
}

}  // namespace cohort
