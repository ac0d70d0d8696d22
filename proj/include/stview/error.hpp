#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stview {

enum class ErrorKind {
  kInvalidArgument,
  kMissingFile,
  kBadMagic,
  kHeaderMismatch,
  kTruncated,
  kDimensionMismatch,
  kNonMonotonicTime,
  kMissingFlow,
  kBadMaskValue,
  kDegenerateFit,
  kOutOfRange,
  kInsufficientFrames,
  kIo,
};

std::string_view to_string(ErrorKind kind);

/// Every library failure surfaces as this exception; `kind()` is stable and
/// machine-readable, `what()` names the offending file or frame.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace stview
