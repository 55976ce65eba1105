#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wettingsim {

enum class ErrorKind {
  InvalidSize,
  InvalidParams,
  Io,
  MalformedFile,
  ChecksumMismatch,
  LengthMismatch,
  LagMismatch,
  EmptyInput,
  TooFewPoints,
  NoCrossing,
  NonPositiveInput,
  EmptyNodeSet,
  SizeCap,
  Config,
  Interrupted,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Exception carrying a machine-checkable category next to the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace wettingsim
