#pragma once

#include <stdexcept>
#include <string>

namespace endokey {

enum class ErrorKind {
  InvalidInput,
  InvalidParameter,
  DegenerateInput,
  FormatError,
  IoError,
};

/// Exception carrying a machine-readable category, mapped to CLI exit codes.
class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::InvalidParameter: return "invalid-parameter";
    case ErrorKind::DegenerateInput: return "degenerate-input";
    case ErrorKind::FormatError: return "format-error";
    case ErrorKind::IoError: return "io-error";
  }
  return "unknown";
}

// 0 success, 1 invalid input/config, 2 degenerate data, 3 I/O or format error
inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput:
    case ErrorKind::InvalidParameter: return 1;
    case ErrorKind::DegenerateInput: return 2;
    case ErrorKind::FormatError:
    case ErrorKind::IoError: return 3;
  }
  return 1;
}

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, std::string(to_string(kind)) + ": " + what);
}

}  // namespace endokey
