#include "stview/error.hpp"

namespace stview {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid_argument";
    case ErrorKind::kMissingFile: return "missing_file";
    case ErrorKind::kBadMagic: return "bad_magic";
    case ErrorKind::kHeaderMismatch: return "header_mismatch";
    case ErrorKind::kTruncated: return "truncated";
    case ErrorKind::kDimensionMismatch: return "dimension_mismatch";
    case ErrorKind::kNonMonotonicTime: return "non_monotonic_time";
    case ErrorKind::kMissingFlow: return "missing_flow";
    case ErrorKind::kBadMaskValue: return "bad_mask_value";
    case ErrorKind::kDegenerateFit: return "degenerate_fit";
    case ErrorKind::kOutOfRange: return "out_of_range";
    case ErrorKind::kInsufficientFrames: return "insufficient_frames";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

}  // namespace stview
