#include "qedcoh/csv.hpp"

#include <cstdio>
#include <stdexcept>

namespace qedcoh::cli {

std::string format_number(double x)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

CsvWriter::CsvWriter(std::ostream& os, std::vector<std::string> header) : os_(os), columns_(header.size())
{
  row(header);
}

void CsvWriter::row(const std::vector<double>& values)
{
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) {
    cells.push_back(format_number(v));
  }
  row(cells);
}

void CsvWriter::row(const std::vector<std::string>& cells)
{
  if (cells.size() != columns_) {
    throw std::logic_error("CSV row width does not match the header");
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0) {
      os_ << ',';
    }
    os_ << cells[i];
  }
  os_ << '\n';
}

void CsvWriter::flush() { os_.flush(); }

} // namespace qedcoh::cli
