#include "p300/error.hpp"

namespace p300 {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::shape: return "shape";
    case ErrorCode::numeric: return "numeric";
    case ErrorCode::io: return "io";
    case ErrorCode::bad_magic: return "bad_magic";
    case ErrorCode::truncated_payload: return "truncated_payload";
    case ErrorCode::bad_label: return "bad_label";
    case ErrorCode::parse: return "parse";
    case ErrorCode::unknown_architecture: return "unknown_architecture";
    case ErrorCode::analysis_only: return "analysis_only";
  }
  return "unknown";
}

}  // namespace p300
