#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ffgan {

enum class ErrorKind {
  InvalidArgument,
  Config,
  MissingGlyph,
  EmptyGlyph,
  UnreadableFont,
  InsufficientFonts,
  InsufficientChars,
  EmptyPartition,
  ShapeMismatch,
  ScheduleLengthMismatch,
  IndexOutOfRange,
  EmptyBatch,
  BatchTooSmall,
  StackMismatch,
  NonFiniteComponent,
  NonFiniteLoss,
  Corrupt,
  VersionMismatch,
  RaggedRows,
  Io,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries a kind so callers (the CLI in
/// particular) can map it to an exit status without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace ffgan
