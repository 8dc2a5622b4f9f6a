#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace reno {

// Operand shape disagreement; the message names the op and both shapes.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An op left its numeric domain: log of a non-positive value, NaN/Inf in an
// output buffer, zero-norm input where a positive norm is required.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Config schema violation. Carries the offending field path ("generator.kind").
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Non-finite objective during an optimization run. Carries the iteration at
// which the run aborted and the last per-term reward values for diagnosis.
class NumericError : public std::runtime_error {
 public:
  NumericError(int iteration, std::vector<double> per_term, const std::string& what)
      : std::runtime_error("iteration " + std::to_string(iteration) + ": " + what),
        iteration_(iteration),
        per_term_(std::move(per_term)) {}

  int iteration() const { return iteration_; }
  const std::vector<double>& per_term() const { return per_term_; }

 private:
  int iteration_;
  std::vector<double> per_term_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace reno
