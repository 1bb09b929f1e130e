#include "ffgan/errors.hpp"

namespace ffgan {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Config: return "Config";
    case ErrorKind::MissingGlyph: return "MissingGlyph";
    case ErrorKind::EmptyGlyph: return "EmptyGlyph";
    case ErrorKind::UnreadableFont: return "UnreadableFont";
    case ErrorKind::InsufficientFonts: return "InsufficientFonts";
    case ErrorKind::InsufficientChars: return "InsufficientChars";
    case ErrorKind::EmptyPartition: return "EmptyPartition";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::ScheduleLengthMismatch: return "ScheduleLengthMismatch";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::EmptyBatch: return "EmptyBatch";
    case ErrorKind::BatchTooSmall: return "BatchTooSmall";
    case ErrorKind::StackMismatch: return "StackMismatch";
    case ErrorKind::NonFiniteComponent: return "NonFiniteComponent";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::Corrupt: return "Corrupt";
    case ErrorKind::VersionMismatch: return "VersionMismatch";
    case ErrorKind::RaggedRows: return "RaggedRows";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace ffgan
