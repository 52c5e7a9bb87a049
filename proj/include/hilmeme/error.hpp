#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hilmeme {

/// One offending field in a rejected payload, e.g. {"mwes[1].score", "missing for non-MWE"}.
struct FieldError {
  std::string field;
  std::string message;

  bool operator==(const FieldError&) const = default;
};

/// Base of every error raised by the library. `code()` is a stable,
/// machine-readable identifier used by the CLI and HTTP layers.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

/// Malformed corpus / output / metric record. `line` is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : Error("parse_error", line > 0 ? "line " + std::to_string(line) + ": " + message : message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A value or payload violating a domain invariant. Carries every offending field.
class ValidationError : public Error {
 public:
  ValidationError(const std::string& message, std::vector<FieldError> fields = {})
      : Error("validation_error", message), fields_(std::move(fields)) {}

  const std::vector<FieldError>& fields() const noexcept { return fields_; }

 private:
  std::vector<FieldError> fields_;
};

class NotFoundError : public Error {
 public:
  explicit NotFoundError(const std::string& message) : Error("not_found", message) {}
};

/// Request is well-formed but conflicts with current state (illegal transition,
/// reused client token, out-of-order submission).
class ConflictError : public Error {
 public:
  explicit ConflictError(const std::string& message) : Error("conflict", message) {}
};

}  // namespace hilmeme
