#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace jumpcons {

/// Process exit codes used by the command line tool.
enum class ExitCode : int {
  kOk = 0,
  kDomainViolation = 1,
  kInputError = 2,
  kNumericFailure = 3,
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ExitCode exit_code() const noexcept = 0;
};

/// Malformed arguments, configs or files.
class InputError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kInputError; }
};

/// An operation called in a context where it does not apply.
class UsageError : public InputError {
 public:
  using InputError::InputError;
};

/// A parameter pair falls outside the admissible parameter space.
class DomainViolation : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kDomainViolation; }
};

/// Density ratio between two Levy measures hit 0 or infinity.
class SupportViolation : public DomainViolation {
 public:
  using DomainViolation::DomainViolation;
};

class NumericError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kNumericFailure; }
};

/// Non-finite state produced during time stepping.
class NumericBlowup : public NumericError {
 public:
  NumericBlowup(std::size_t step, double time)
      : NumericError("non-finite state at step " + std::to_string(step) + " (t=" +
                     std::to_string(time) + ")"),
        step_(step),
        time_(time) {}

  std::size_t step() const noexcept { return step_; }
  double time() const noexcept { return time_; }

 private:
  std::size_t step_;
  double time_;
};

}  // namespace jumpcons
