#include "specrank/error.hpp"

namespace specrank {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DuplicateId: return "DuplicateId";
    case ErrorKind::DanglingTarget: return "DanglingTarget";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::DegenerateVector: return "DegenerateVector";
    case ErrorKind::InvalidVector: return "InvalidVector";
    case ErrorKind::DimMismatch: return "DimMismatch";
    case ErrorKind::FormatError: return "FormatError";
    case ErrorKind::IndexError: return "IndexError";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::SingularDesign: return "SingularDesign";
    case ErrorKind::SeparationDetected: return "SeparationDetected";
    case ErrorKind::NotNested: return "NotNested";
    case ErrorKind::DegenerateInput: return "DegenerateInput";
    case ErrorKind::ArityError: return "ArityError";
    case ErrorKind::MissingLimit: return "MissingLimit";
    case ErrorKind::BackendUnavailable: return "BackendUnavailable";
    case ErrorKind::ProtocolError: return "ProtocolError";
    case ErrorKind::EmptyGeneration: return "EmptyGeneration";
    case ErrorKind::ValidationError: return "ValidationError";
    case ErrorKind::MissingArtifact: return "MissingArtifact";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

namespace {
std::string compose(ErrorKind kind, const std::string& message,
                    std::optional<std::size_t> line) {
  std::string out(to_string(kind));
  if (line) out += " (line " + std::to_string(*line) + ")";
  out += ": ";
  out += message;
  return out;
}
}  // namespace

Error::Error(ErrorKind kind, const std::string& message, std::optional<std::size_t> line)
    : std::runtime_error(compose(kind, message, line)), kind_(kind), line_(line) {}

}  // namespace specrank
