#include "fblopt/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "fblopt/errors.hpp"

namespace fblopt {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool is_nan(const CsvValue& v) { return std::holds_alternative<double>(v) && std::isnan(std::get<double>(v)); }

void write_quoted(std::ostream& out, std::string_view s) {
  out << '"';
  for (char c : s) {
    if (c == '"') out << '"';
    out << c;
  }
  out << '"';
}

}  // namespace

CsvTable::CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {
  for (std::size_t i = 0; i < columns_.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (columns_[i] == columns_[j]) throw UsageError("duplicate CSV column '" + columns_[i] + "'");
}

std::size_t CsvTable::index_of(std::string_view column) const {
  for (std::size_t i = 0; i < columns_.size(); ++i)
    if (columns_[i] == column) return i;
  throw UsageError("unknown CSV column '" + std::string(column) + "'");
}

void CsvTable::add(const CsvRow& row) {
  std::vector<CsvValue> values(columns_.size(), CsvValue{kNaN});
  for (const auto& [key, value] : row) values[index_of(key)] = value;
  add_ordered(std::move(values));
}

void CsvTable::add_ordered(std::vector<CsvValue> values) {
  if (values.size() != columns_.size()) {
    throw UsageError("CSV row has " + std::to_string(values.size()) + " cells, table has " +
                     std::to_string(columns_.size()) + " columns");
  }
  for (std::size_t s = 0; s < columns_.size(); ++s) {
    if (columns_[s] != "status" || !std::holds_alternative<std::string>(values[s])) continue;
    std::string& status = std::get<std::string>(values[s]);
    if (status != "ok") break;
    std::string missing;
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      if (is_nan(values[i])) missing += (missing.empty() ? "" : " ") + columns_[i];
    }
    if (!missing.empty()) status += "; nan: " + missing;
    break;
  }
  rows_.push_back(std::move(values));
}

const CsvValue& CsvTable::at(std::size_t row, std::string_view column) const {
  if (row >= rows_.size()) throw UsageError("CSV row index out of range");
  return rows_[row][index_of(column)];
}

double CsvTable::number(std::size_t row, std::string_view column) const {
  const CsvValue& v = at(row, column);
  if (!std::holds_alternative<double>(v)) throw UsageError("CSV cell '" + std::string(column) + "' is not numeric");
  return std::get<double>(v);
}

const std::string& CsvTable::text(std::size_t row, std::string_view column) const {
  const CsvValue& v = at(row, column);
  if (!std::holds_alternative<std::string>(v)) throw UsageError("CSV cell '" + std::string(column) + "' is not text");
  return std::get<std::string>(v);
}

bool same_table(const CsvTable& a, const CsvTable& b) {
  if (a.columns() != b.columns() || a.size() != b.size()) return false;
  for (std::size_t r = 0; r < a.size(); ++r) {
    for (std::size_t c = 0; c < a.columns().size(); ++c) {
      const CsvValue& x = a.rows()[r][c];
      const CsvValue& y = b.rows()[r][c];
      if (is_nan(x) && is_nan(y)) continue;
      if (x != y) return false;
    }
  }
  return true;
}

std::string format_number(double value) {
  if (std::isnan(value)) return "";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_csv(std::ostream& out, const CsvTable& table) {
  const auto& cols = table.columns();
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (c) out << ',';
    write_quoted(out, cols[c]);
  }
  out << "\r\n";
  for (const auto& row : table.rows()) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ',';
      if (std::holds_alternative<double>(row[c])) {
        out << format_number(std::get<double>(row[c]));
      } else {
        write_quoted(out, std::get<std::string>(row[c]));
      }
    }
    out << "\r\n";
  }
}

std::string to_csv(const CsvTable& table) {
  std::ostringstream os;
  write_csv(os, table);
  return os.str();
}

void emit_csv(const CsvTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_csv(out, table);
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

CsvTable parse_csv(std::string_view text) {
  struct Cell {
    std::string raw;
    bool quoted = false;
  };
  std::vector<std::vector<Cell>> records;
  std::vector<Cell> record;
  Cell cell;
  bool in_quotes = false;
  bool at_cell_start = true;
  std::size_t i = 0;
  auto end_cell = [&] {
    record.push_back(std::move(cell));
    cell = Cell{};
    at_cell_start = true;
  };
  auto end_record = [&] {
    end_cell();
    records.push_back(std::move(record));
    record.clear();
  };
  while (i < text.size()) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell.raw += '"';
          i += 2;
          continue;
        }
        in_quotes = false;
      } else {
        cell.raw += c;
      }
      ++i;
      continue;
    }
    if (c == '"') {
      if (!at_cell_start) throw ValidationError("CSV: quote inside an unquoted cell");
      in_quotes = true;
      cell.quoted = true;
      at_cell_start = false;
    } else if (c == ',') {
      end_cell();
    } else if (c == '\r' || c == '\n') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      end_record();
    } else {
      if (cell.quoted) throw ValidationError("CSV: text after a closing quote");
      cell.raw += c;
      at_cell_start = false;
    }
    ++i;
  }
  if (in_quotes) throw ValidationError("CSV: unterminated quoted cell");
  if (!record.empty() || !cell.raw.empty() || cell.quoted) end_record();
  if (records.empty()) throw ValidationError("CSV: missing header");

  std::vector<std::string> columns;
  for (auto& h : records.front()) columns.push_back(std::move(h.raw));
  CsvTable table(std::move(columns));
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != table.columns().size()) {
      throw ValidationError("CSV: record " + std::to_string(r) + " has " + std::to_string(rec.size()) + " cells");
    }
    std::vector<CsvValue> values;
    values.reserve(rec.size());
    for (const auto& c : rec) {
      if (c.quoted) {
        values.emplace_back(c.raw);
      } else if (c.raw.empty()) {
        values.emplace_back(kNaN);
      } else if (c.raw == "inf" || c.raw == "-inf") {
        values.emplace_back(c.raw[0] == '-' ? -std::numeric_limits<double>::infinity()
                                            : std::numeric_limits<double>::infinity());
      } else {
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(c.raw.data(), c.raw.data() + c.raw.size(), v);
        if (ec != std::errc() || ptr != c.raw.data() + c.raw.size()) {
          throw ValidationError("CSV: '" + c.raw + "' is not a number");
        }
        values.emplace_back(v);
      }
    }
    table.add_ordered(std::move(values));
  }
  return table;
}

}  // namespace fblopt
