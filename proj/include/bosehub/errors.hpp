#pragma once

#include <stdexcept>
#include <string>

namespace bosehub {

// Basis or dense-matrix size exceeds what the library is willing to allocate.
class CapacityError : public std::length_error {
public:
  using std::length_error::length_error;
};

// Iterative eigensolver ran out of restarts.
class ConvergenceError : public std::runtime_error {
public:
  ConvergenceError(const std::string& what, double best_residual)
      : std::runtime_error(what), best_residual_(best_residual) {}

  double best_residual() const noexcept { return best_residual_; }

private:
  double best_residual_;
};

// Vanishing perturbative energy denominator (resonant disorder).
class SingularityError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

// Requested state is not unique (e.g. the periodic superfluid at odd L).
class DegeneracyError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

// Bracketed root search found no sign change.
class RootError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace bosehub
