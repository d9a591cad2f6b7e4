#pragma once

#include <stdexcept>
#include <string>

namespace gilevel {

// Shape or symmetry violations on matrix/vector inputs.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Parameter values outside their admissible range (degrees of freedom,
// discount factors, moment-existence bounds, ...).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Positive-definiteness failure detected during a factorization.
class SingularityError : public std::runtime_error {
 public:
  SingularityError(const std::string& what, int pivot)
      : std::runtime_error(what), pivot_(pivot) {}
  // Index of the first non-positive Cholesky pivot, -1 if not applicable.
  int pivot() const { return pivot_; }

 private:
  int pivot_ = -1;
};

// Bad data values (non-finite entries, ragged rows, ...).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numerical procedure failed to reach its accuracy contract.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double residual = 0.0)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_ = 0.0;
};

// Invalid or incomplete run configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An estimation routine failed persistently.
class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gilevel
