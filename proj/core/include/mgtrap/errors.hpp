#pragma once

#include <stdexcept>
#include <string>

namespace mgtrap {

/// Bad input: malformed configuration, invalid arguments, unreadable data.
/// The command-line front end maps these to exit status 1.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical procedure could not produce a result for valid input.
/// The command-line front end maps these to exit status 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

class LengthError : public InputError {
 public:
  using InputError::InputError;
};

class NonFiniteError : public InputError {
 public:
  using InputError::InputError;
};

class GridMismatch : public InputError {
 public:
  using InputError::InputError;
};

class OutOfField : public InputError {
 public:
  using InputError::InputError;
};

class NoEquilibrium : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class Unstable : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ImaginaryFrequency : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NoConvergence : public NumericalError {
 public:
  NoConvergence(const std::string& what, double best_residual)
      : NumericalError(what), best_residual_(best_residual) {}
  double best_residual() const noexcept { return best_residual_; }

 private:
  double best_residual_;
};

class NoPeak : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class AllMissing : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// The particle left the region |r| <= y0 where the field expansion is modeled.
class Escape : public NumericalError {
 public:
  Escape(const std::string& what, double time_s) : NumericalError(what), time_s_(time_s) {}
  double time_s() const noexcept { return time_s_; }

 private:
  double time_s_;
};

}  // namespace mgtrap
