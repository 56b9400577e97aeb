#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace p300 {

// Stable error categories. The CLI prints these names verbatim, so they are
// part of the machine-readable error line.
enum class ErrorCode {
  invalid_argument,
  shape,
  numeric,
  io,
  bad_magic,
  truncated_payload,
  bad_label,
  parse,
  unknown_architecture,
  analysis_only,
};

std::string_view to_string(ErrorCode code) noexcept;

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

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace p300
