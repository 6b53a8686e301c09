#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace qedcoh::cli {

/// Decimal text with 12 significant digits ("%.12g").
std::string format_number(double x);

/// Comma-separated rows with '\n' endings; the header is written on
/// construction. Every row must have as many cells as the header.
class CsvWriter
{
public:
  CsvWriter(std::ostream& os, std::vector<std::string> header);

  void row(const std::vector<double>& values);
  void row(const std::vector<std::string>& cells);
  void flush();

private:
  std::ostream& os_;
  std::size_t columns_;
};

} // namespace qedcoh::cli
