#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace expint {

/// Base for every error raised by the library. `numerical()` separates
/// failures of the mathematics from bad input.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual bool numerical() const noexcept { return true; }
};

class ConfigError : public Error {
 public:
  using Error::Error;
  bool numerical() const noexcept override { return false; }
};

class NotSkewHermitian : public Error {
 public:
  using Error::Error;
};

class NoConvergence : public Error {
 public:
  using Error::Error;
};

class SingularFunctionValue : public Error {
 public:
  using Error::Error;
};

class FixedPointDiverged : public Error {
 public:
  explicit FixedPointDiverged(const std::string& what, std::size_t step = 0)
      : Error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }
  void set_step(std::size_t step) noexcept { step_ = step; }

 private:
  std::size_t step_;
};

class UnknownMethod : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class NotSymplecticRK : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class CombinatorialBudgetExceeded : public Error {
 public:
  using Error::Error;
};

class AliasedSampling : public Error {
 public:
  using Error::Error;
};

class IllConditionedBasis : public Error {
 public:
  using Error::Error;
};

class ToleranceNotReached : public Error {
 public:
  using Error::Error;
};

}  // namespace expint
