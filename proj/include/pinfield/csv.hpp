#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace pinfield {

/// Shortest round-trip decimal form ('.' separator, locale independent).
std::string format_number(double v);
std::string format_number(std::int64_t v);
std::string format_number(std::uint64_t v);
inline std::string format_number(int v) { return format_number(static_cast<std::int64_t>(v)); }

/// In-memory CSV table; serialized with RFC 4180 quoting and '\n' endings.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  CsvTable& row(std::vector<std::string> cells);
  const std::vector<std::string>& header() const noexcept { return header_; }
  const std::vector<std::vector<std::string>>& rows() const noexcept { return rows_; }

  void write(std::ostream& out) const;
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

std::string csv_escape(std::string_view cell);

}  // namespace pinfield
