#pragma once

#include <stdexcept>
#include <string>

namespace expmoments {

/// Argument outside the mathematical domain of an operation (p <= -1, q outside (0,2), ...).
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// A requested engine or closed form does not apply to the given model.
class NotApplicable : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed textual input (model literals, CLI arguments).
class ParseError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Iterative procedure (quadrature, root bracketing) failed to reach its tolerance.
class ConvergenceError : public std::runtime_error {
public:
  ConvergenceError(const std::string& what, double best_estimate, double achieved_error)
      : std::runtime_error(what), best_estimate_(best_estimate), achieved_error_(achieved_error) {}

  double best_estimate() const noexcept { return best_estimate_; }
  double achieved_error() const noexcept { return achieved_error_; }

private:
  double best_estimate_;
  double achieved_error_;
};

}  // namespace expmoments
