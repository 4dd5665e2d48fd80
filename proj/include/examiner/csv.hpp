#pragma once

#include <cstddef>
#include <initializer_list>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace examiner::csv {

// Minimal delimited-text reader. Double quotes enclose fields containing the
// delimiter, quotes ("" escapes) or line breaks.
class Reader {
 public:
  Reader(std::istream& in, char delimiter) : in_(in), delimiter_(delimiter) {}

  // Reads the next record. Returns false at end of input. Blank lines are
  // skipped.
  bool next(std::vector<std::string>& fields);

  // 1-based line number where the last returned record started.
  std::size_t line() const noexcept { return record_line_; }

 private:
  std::istream& in_;
  char delimiter_;
  std::size_t line_ = 0;
  std::size_t record_line_ = 0;
};

std::vector<std::string> split(std::string_view line, char delimiter);

std::string escape(std::string_view field, char delimiter);

void write_row(std::ostream& out, std::span<const std::string> fields, char delimiter);
void write_row(std::ostream& out, std::initializer_list<std::string> fields, char delimiter);

// Shortest text that reads back to the same double.
std::string format_double(double v);

}  // namespace examiner::csv
