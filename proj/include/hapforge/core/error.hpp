#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hapforge {

enum class ErrorKind {
  Validation,    // malformed or out-of-range input data
  Parameter,     // bad configuration value
  Length,        // sequence too short / length mismatch
  Io,            // file system failure
  MissingInput,  // required input file or argument absent
  Degenerate,    // numeric degeneracy (constant range, zero variance, ...)
  BadMagic,
  BadVersion,
  Checksum,
  Shape,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  /// The message without the kind prefix.
  const std::string& detail() const noexcept { return detail_; }

private:
  ErrorKind kind_;
  std::string detail_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace hapforge
