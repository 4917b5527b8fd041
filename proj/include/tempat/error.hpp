#pragma once

#include <stdexcept>
#include <string>

namespace tempat {

/// Process exit codes used by the CLI.
enum class ExitCode : int { Ok = 0, Validation = 2, Data = 3, Numerical = 4 };

/// Base class for all library errors. Carries the CLI exit code.
class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

/// Invalid parameters or contract violations detected before computing.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(ExitCode::Validation, what) {}
};

/// Missing, malformed or insufficient input data.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ExitCode::Data, what) {}
};

/// Divergence, non-convergence, degenerate graphs and the like.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ExitCode::Numerical, what) {}
};

}  // namespace tempat
