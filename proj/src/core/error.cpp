#include "hapforge/core/error.hpp"

namespace hapforge {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Parameter: return "parameter";
    case ErrorKind::Length: return "length";
    case ErrorKind::Io: return "io";
    case ErrorKind::MissingInput: return "missing-input";
    case ErrorKind::Degenerate: return "degenerate";
    case ErrorKind::BadMagic: return "bad-magic";
    case ErrorKind::BadVersion: return "bad-version";
    case ErrorKind::Checksum: return "checksum";
    case ErrorKind::Shape: return "shape";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), detail_(message) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace hapforge
