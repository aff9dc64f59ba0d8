#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace multipd {

// RFC-4180 quoting: a field containing a comma, quote, or line break is
// wrapped in double quotes, with embedded quotes doubled.
std::string csv_field(const std::string& raw);

// Shortest decimal form that round-trips the value exactly, so output files
// are byte-stable across runs and readable back without loss.
std::string csv_num(double v);
std::string csv_num(std::uint64_t v);
std::string csv_num(int v);

class CsvWriter {
  public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}

    void row(const std::vector<std::string>& cells);

  private:
    std::ostream& out_;
};

}  // namespace multipd
