#pragma once

#include <stdexcept>
#include <string>

namespace urbanpulse {

// Every failure raised by the library derives from Error. `kind()` is a
// stable machine-readable tag used by the CLI's JSON error output.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& message, long line = 0)
      : Error("parse_error", line > 0 ? "line " + std::to_string(line) + ": " + message : message),
        line_(line) {}
  long line() const noexcept { return line_; }

 private:
  long line_;
};

class ValidationError : public Error {
 public:
  ValidationError(const std::string& message, long line = 0)
      : Error("validation_error",
              line > 0 ? "line " + std::to_string(line) + ": " + message : message),
        line_(line) {}
  long line() const noexcept { return line_; }

 private:
  long line_;
};

class EmptyInputError : public Error {
 public:
  explicit EmptyInputError(const std::string& message) : Error("empty_input", message) {}
};

class SpecError : public Error {
 public:
  explicit SpecError(const std::string& message) : Error("spec_error", message) {}
};

class InsufficientDataError : public Error {
 public:
  explicit InsufficientDataError(const std::string& message)
      : Error("insufficient_data", message) {}
};

class DegenerateModelError : public Error {
 public:
  explicit DegenerateModelError(const std::string& message)
      : Error("degenerate_model", message) {}
};

class NotFoundError : public Error {
 public:
  explicit NotFoundError(const std::string& message) : Error("not_found", message) {}
};

class FingerprintMismatchError : public Error {
 public:
  explicit FingerprintMismatchError(const std::string& message)
      : Error("fingerprint_mismatch", message) {}
};

}  // namespace urbanpulse
