#pragma once

#include <stdexcept>
#include <string>

namespace lord {

/// Invalid parameter, probability level or dose value.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A scalar root could not be bracketed or did not converge.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One of the outcome probabilities underflowed to zero at a dose.
class DegenerateDoseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The OBD stationarity condition has a vanishing derivative.
class DegenerateGradientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A design's information matrix is not positive definite.
class SingularDesignError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Restriction leaves no admissible dose.
class EmptyWindowError : public std::runtime_error {
 public:
  EmptyWindowError(const std::string& what, double lower, double upper)
      : std::runtime_error(what), lower_(lower), upper_(upper) {}

  double lower() const noexcept { return lower_; }
  double upper() const noexcept { return upper_; }

 private:
  double lower_;
  double upper_;
};

/// No grid dose has toxicity at or below the target level.
class NoSafeDoseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lord
