#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace fblopt {

// Numbers are written with 17 significant digits and read back exactly. Strings
// are always quoted, so a quoted "1" stays a string. NaN is an empty cell.
using CsvValue = std::variant<double, std::string>;

using CsvRow = std::vector<std::pair<std::string, CsvValue>>;

// Fixed column order; rows are stored in that order.
class CsvTable {
 public:
  CsvTable() = default;
  explicit CsvTable(std::vector<std::string> columns);

  const std::vector<std::string>& columns() const noexcept { return columns_; }
  const std::vector<std::vector<CsvValue>>& rows() const noexcept { return rows_; }
  std::size_t size() const noexcept { return rows_.size(); }

  // Keys may come in any order; absent keys become NaN. UsageError on unknown keys.
  // When the table has a "status" column holding "ok", NaN cells are appended to it.
  void add(const CsvRow& row);

  // Appends a row given in column order. UsageError on a length mismatch.
  void add_ordered(std::vector<CsvValue> values);

  const CsvValue& at(std::size_t row, std::string_view column) const;
  double number(std::size_t row, std::string_view column) const;
  const std::string& text(std::size_t row, std::string_view column) const;

 private:
  std::size_t index_of(std::string_view column) const;
  std::vector<std::string> columns_;
  std::vector<std::vector<CsvValue>> rows_;
};

// NaN compares equal to NaN here.
bool same_table(const CsvTable& a, const CsvTable& b);

std::string format_number(double value);

void write_csv(std::ostream& out, const CsvTable& table);
std::string to_csv(const CsvTable& table);
// IoError when the file cannot be written.
void emit_csv(const CsvTable& table, const std::string& path);

// ValidationError on malformed input (unterminated quote, ragged rows, bad number).
CsvTable parse_csv(std::string_view text);

}  // namespace fblopt
