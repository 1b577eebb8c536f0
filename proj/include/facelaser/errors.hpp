#pragma once

#include <stdexcept>
#include <string>

namespace facelaser {

enum class ErrorCode {
  DegenerateInput,
  DegenerateNormal,
  BehindCamera,
  ParseError,
  MissingField,
  EmptyCloud,
  TooFewPoints,
  InvalidParam,
  NoCorrespondences,
  MalformedLandmarks,
  EmptySegment,
  EmptyLog,
  ContactError,
  AbortedOnSafety,
  NoSurfaceInRange,
  IoError,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::DegenerateNormal: return "DegenerateNormal";
    case ErrorCode::BehindCamera: return "BehindCamera";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::EmptyCloud: return "EmptyCloud";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::InvalidParam: return "InvalidParam";
    case ErrorCode::NoCorrespondences: return "NoCorrespondences";
    case ErrorCode::MalformedLandmarks: return "MalformedLandmarks";
    case ErrorCode::EmptySegment: return "EmptySegment";
    case ErrorCode::EmptyLog: return "EmptyLog";
    case ErrorCode::ContactError: return "ContactError";
    case ErrorCode::AbortedOnSafety: return "AbortedOnSafety";
    case ErrorCode::NoSurfaceInRange: return "NoSurfaceInRange";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace facelaser
