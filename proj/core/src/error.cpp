#include "wettingsim/error.hpp"

namespace wettingsim {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidSize: return "invalid-size";
    case ErrorKind::InvalidParams: return "invalid-params";
    case ErrorKind::Io: return "io";
    case ErrorKind::MalformedFile: return "malformed-file";
    case ErrorKind::ChecksumMismatch: return "checksum-mismatch";
    case ErrorKind::LengthMismatch: return "length-mismatch";
    case ErrorKind::LagMismatch: return "lag-mismatch";
    case ErrorKind::EmptyInput: return "empty-input";
    case ErrorKind::TooFewPoints: return "too-few-points";
    case ErrorKind::NoCrossing: return "no-crossing";
    case ErrorKind::NonPositiveInput: return "nonpositive-input";
    case ErrorKind::EmptyNodeSet: return "empty-node-set";
    case ErrorKind::SizeCap: return "size-cap";
    case ErrorKind::Config: return "config";
    case ErrorKind::Interrupted: return "interrupted";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

}  // namespace wettingsim
