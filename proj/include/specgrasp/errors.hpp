#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace specgrasp {

/// Error categories. The numeric values double as CLI exit codes.
enum class ErrorKind : int {
  Validation = 2,
  Io = 3,
  Numeric = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Precondition or invariant violation (grid mismatch, wrong kind, bad parameter).
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(ErrorKind::Validation, what) {}
};

/// Unreadable, unwritable or malformed input. Carries the file and 1-based line when known.
class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
  IoError(const std::string& file, std::size_t line, const std::string& what)
      : Error(ErrorKind::Io, file + ":" + std::to_string(line) + ": " + what), file_(file), line_(line) {}

  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string file_;
  std::size_t line_ = 0;
};

/// Numerical failure: zero-norm spectrum, singular fit, and the like.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ErrorKind::Numeric, what) {}
};

}  // namespace specgrasp
