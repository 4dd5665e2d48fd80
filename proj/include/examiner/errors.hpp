#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace examiner {

// Bad flags, unreadable or inconsistent configuration. CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input data that cannot be used as-is. CLI exit code 3.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A mandatory column is missing from the input header.
class SchemaError : public DataError {
 public:
  using DataError::DataError;
};

// Linear algebra or iterative solver failure. CLI exit code 4.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RankDeficientError : public NumericalError {
 public:
  RankDeficientError(const std::string& what, std::vector<std::string> columns)
      : NumericalError(what), columns_(std::move(columns)) {}
  const std::vector<std::string>& columns() const noexcept { return columns_; }

 private:
  std::vector<std::string> columns_;
};

class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, std::vector<double> trace)
      : NumericalError(what), trace_(std::move(trace)) {}
  // Max absolute column change after each sweep.
  const std::vector<double>& trace() const noexcept { return trace_; }

 private:
  std::vector<double> trace_;
};

}  // namespace examiner
