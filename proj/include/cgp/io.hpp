#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace cgp {

// Shortest decimal form that round-trips to the same double; keeps repeated
// runs byte-identical. NaN and infinities print as nan / inf / -inf.
std::string format_double(double value);

// Strict parse of one double; throws std::invalid_argument on trailing junk.
double parse_double(const std::string& text);

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;  // each row has columns.size() cells

  int column_index(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const CsvTable& table);

}  // namespace cgp
