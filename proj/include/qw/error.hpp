#pragma once

#include <stdexcept>
#include <string>

namespace qw {

enum class ErrorCode {
  invalid_argument = 1,
  io = 2,
  format = 3,
  version_mismatch = 4,
  runtime = 5,
  conflict = 6,
  not_found = 7,
};

/// Exception type thrown by every module of the library. The C API maps the
/// code onto its status enum.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorCode::invalid_argument, message);
}

}  // namespace qw
