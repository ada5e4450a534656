#include "surfdict/error.hpp"

namespace surfdict {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kMissingFile: return "missing file";
    case ErrorKind::kMalformedHeader: return "malformed header";
    case ErrorKind::kUnsupportedMaxval: return "unsupported maxval";
    case ErrorKind::kTruncated: return "truncated data";
    case ErrorKind::kBadMagic: return "bad magic";
    case ErrorKind::kUnsupportedVersion: return "unsupported version";
    case ErrorKind::kInvariantViolation: return "invariant violation";
    case ErrorKind::kParameter: return "parameter error";
    case ErrorKind::kStructural: return "structural error";
    case ErrorKind::kIo: return "i/o error";
  }
  return "unknown error";
}

}  // namespace surfdict
