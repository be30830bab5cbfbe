#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace incpen {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad argument: dimension mismatch, out-of-domain parameter, malformed input.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

// An iterative oracle hit its iteration cap.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> last_iterate, double residual)
      : Error(what), last_iterate_(std::move(last_iterate)), residual_(residual) {}

  const std::vector<double>& last_iterate() const noexcept { return last_iterate_; }
  double residual() const noexcept { return residual_; }

 private:
  std::vector<double> last_iterate_;
  double residual_;
};

// The solver produced a non-finite or runaway iterate.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::vector<double> last_finite, std::size_t k)
      : Error(what), last_finite_(std::move(last_finite)), k_(k) {}

  const std::vector<double>& last_finite() const noexcept { return last_finite_; }
  std::size_t iteration() const noexcept { return k_; }

 private:
  std::vector<double> last_finite_;
  std::size_t k_;
};

}  // namespace incpen
