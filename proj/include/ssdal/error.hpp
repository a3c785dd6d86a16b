#pragma once

#include <stdexcept>
#include <string>

namespace ssdal {

enum class ErrorKind {
  config,
  io,
  missing_prerequisite,
  data,
  shape,
  validation,
  verification,
};

/// Every failure raised by the library carries a kind so the CLI can map it
/// onto a stable exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) fail(kind, what);
}

/// 0 success, 2 config, 3 I/O, 4 missing prerequisite, 5 data/shape,
/// 6 verification failure.
inline int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::config:
      return 2;
    case ErrorKind::io:
      return 3;
    case ErrorKind::missing_prerequisite:
      return 4;
    case ErrorKind::data:
    case ErrorKind::shape:
    case ErrorKind::validation:
      return 5;
    case ErrorKind::verification:
      return 6;
  }
  return 1;
}

const char* to_string(ErrorKind kind) noexcept;

}  // namespace ssdal
