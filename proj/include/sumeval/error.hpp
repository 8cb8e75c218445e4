#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sumeval {

/// Invalid run configuration (bad flags, unknown metric, missing inputs).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data. Carries the 1-based line number
/// of the offending record when one is known (0 otherwise).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A statistic that is undefined for the given input (e.g. a constant series).
class DegenerateError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Too few aligned observations to compute a statistic.
class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace sumeval
