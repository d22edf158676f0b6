#pragma once

#include <stdexcept>
#include <string>

namespace asl {

// Error classes. The CLI prints these as one-line machine-parsable codes,
// so every failure mode in the library maps to exactly one code.
enum class ErrorCode {
  Shape,
  Format,
  UnsupportedDtype,
  UnsupportedLayout,
  Truncation,
  Pairing,
  Label,
  Normalization,
  Split,
  Parameter,
  Input,
  Checkpoint,
  Config,
  Io,
  Numeric,
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::Shape: return "shape";
    case ErrorCode::Format: return "format";
    case ErrorCode::UnsupportedDtype: return "unsupported-dtype";
    case ErrorCode::UnsupportedLayout: return "unsupported-layout";
    case ErrorCode::Truncation: return "truncation";
    case ErrorCode::Pairing: return "pairing";
    case ErrorCode::Label: return "label";
    case ErrorCode::Normalization: return "normalization";
    case ErrorCode::Split: return "split";
    case ErrorCode::Parameter: return "parameter";
    case ErrorCode::Input: return "input";
    case ErrorCode::Checkpoint: return "checkpoint";
    case ErrorCode::Config: return "config";
    case ErrorCode::Io: return "io";
    case ErrorCode::Numeric: return "numeric";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace asl
