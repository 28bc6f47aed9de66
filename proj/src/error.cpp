#include "patchnet/error.hpp"

namespace patchnet {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidDepth: return "invalid-depth";
    case ErrorKind::BehindCamera: return "behind-camera";
    case ErrorKind::MalformedCalibration: return "malformed-calibration";
    case ErrorKind::EmptyInput: return "empty-input";
    case ErrorKind::EmptyForeground: return "empty-foreground";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::NonFinite: return "non-finite";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Format: return "format";
    case ErrorKind::EmptyRoi: return "empty-roi";
    case ErrorKind::Alignment: return "alignment";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

}  // namespace patchnet
