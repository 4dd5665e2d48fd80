#include "examiner/csv.hpp"

#include <charconv>

namespace examiner::csv {

namespace {

bool quotes_balanced(std::string_view text) {
  bool in_quotes = false;
  for (char c : text) {
    if (c == '"') in_quotes = !in_quotes;
  }
  return !in_quotes;
}

}  // namespace

bool Reader::next(std::vector<std::string>& fields) {
  std::string record;
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (record.empty()) {
      if (line.empty()) continue;
      record_line_ = line_;
      record = std::move(line);
    } else {
      record += '\n';
      record += line;
    }
    if (quotes_balanced(record)) {
      fields = split(record, delimiter_);
      return true;
    }
  }
  if (!record.empty()) {
    // Unterminated quote at end of input: hand back what we have.
    fields = split(record, delimiter_);
    return true;
  }
  return false;
}

std::vector<std::string> split(std::string_view line, char delimiter) {
  std::vector<std::string> out;
  std::string field;
  bool in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == delimiter) {
      out.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  out.push_back(std::move(field));
  return out;
}

std::string escape(std::string_view field, char delimiter) {
  bool needs_quotes = field.find_first_of(std::string{delimiter, '"', '\n', '\r'}) != std::string_view::npos;
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void write_row(std::ostream& out, std::span<const std::string> fields, char delimiter) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << delimiter;
    out << escape(fields[i], delimiter);
  }
  out << '\n';
}

void write_row(std::ostream& out, std::initializer_list<std::string> fields, char delimiter) {
  write_row(out, std::span<const std::string>(fields.begin(), fields.size()), delimiter);
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace examiner::csv
