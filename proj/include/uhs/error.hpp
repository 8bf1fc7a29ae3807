#pragma once

#include <stdexcept>
#include <string>

namespace uhs {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value or configuration violates a documented invariant.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Numerical failure inside the simulator or the trainer.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// The pressure solver did not reach its tolerance.
class SolverError : public NumericalError {
 public:
  SolverError(const std::string& what, int iterations, double residual)
      : NumericalError(what), iterations_(iterations), residual_(residual) {}

  int iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }

 private:
  int iterations_;
  double residual_;
};

/// On-disk format problems. The kind distinguishes the failure modes the
/// readers are required to report.
class FormatError : public Error {
 public:
  enum class Kind { io, bad_magic, version_mismatch, truncated, checksum, layout };

  FormatError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

}  // namespace uhs
