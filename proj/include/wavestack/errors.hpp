#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace wavestack {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (negative time,
/// speed bounds outside (0,1), ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration: grid violates CFL, unknown config key, bad value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Array sizes that do not match the grid or the requested norm kind.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values appeared while time stepping.
class SolverDivergence : public Error {
 public:
  SolverDivergence(const std::string& what, int level) : Error(what), level_(level) {}
  int level() const noexcept { return level_; }

 private:
  int level_;
};

/// An iterative method ran out of iterations. The residual history is kept for
/// diagnostics.
class IterationError : public Error {
 public:
  IterationError(const std::string& what, std::vector<double> history)
      : Error(what), history_(std::move(history)) {}
  const std::vector<double>& history() const noexcept { return history_; }

 private:
  std::vector<double> history_;
};

/// The forward/backward fixed point of the optimality system did not contract.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> history)
      : Error(what), history_(std::move(history)) {}
  const std::vector<double>& history() const noexcept { return history_; }

 private:
  std::vector<double> history_;
};

}  // namespace wavestack
