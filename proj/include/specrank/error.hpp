#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace specrank {

enum class ErrorKind {
  DuplicateId,
  DanglingTarget,
  ParseError,
  DegenerateVector,
  InvalidVector,
  DimMismatch,
  FormatError,
  IndexError,
  EmptyInput,
  SingularDesign,
  SeparationDetected,
  NotNested,
  DegenerateInput,
  ArityError,
  MissingLimit,
  BackendUnavailable,
  ProtocolError,
  EmptyGeneration,
  ValidationError,
  MissingArtifact,
  IoError,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library. `kind()` identifies the contract that
/// was violated; ParseError additionally carries the 1-based input line.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message,
        std::optional<std::size_t> line = std::nullopt);

  ErrorKind kind() const noexcept { return kind_; }
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  ErrorKind kind_;
  std::optional<std::size_t> line_;
};

/// Raised by transports for retryable failures (connection refused, 5xx).
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace specrank
