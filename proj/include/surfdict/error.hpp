#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace surfdict {

enum class ErrorKind {
  kMissingFile,
  kMalformedHeader,
  kUnsupportedMaxval,
  kTruncated,
  kBadMagic,
  kUnsupportedVersion,
  kInvariantViolation,
  kParameter,
  kStructural,
  kIo,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace surfdict
