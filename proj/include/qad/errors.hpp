#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace qad {

/// Base class of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller supplied arguments outside an operation's domain.
class InputError : public Error {
 public:
  using Error::Error;
};

class UnknownMaterialError : public Error {
 public:
  explicit UnknownMaterialError(const std::string& name)
      : Error("unknown material '" + name + "'"), name_(name) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

/// Raised when a parameter set leaves the transmon regime (E_J/E_c < 30).
class RegimeError : public Error {
 public:
  using Error::Error;
};

/// Eigensolver or linear solver failure. Carries the residual norms reached.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, std::vector<double> residuals = {})
      : Error(what), residuals_(std::move(residuals)) {}
  const std::vector<double>& residuals() const noexcept { return residuals_; }

 private:
  std::vector<double> residuals_;
};

}  // namespace qad
