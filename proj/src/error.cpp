#include "codeassist/error.hpp"

namespace codeassist {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::UnknownFile: return "UnknownFile";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::DuplicateRequest: return "DuplicateRequest";
    case ErrorCode::UnknownRequest: return "UnknownRequest";
    case ErrorCode::ResponseForCompletedEntry: return "ResponseForCompletedEntry";
    case ErrorCode::MalformedRange: return "MalformedRange";
    case ErrorCode::CursorSectionOverBudget: return "CursorSectionOverBudget";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::EmptyScript: return "EmptyScript";
    case ErrorCode::AnchorNotFound: return "AnchorNotFound";
    case ErrorCode::AmbiguousAnchor: return "AmbiguousAnchor";
    case ErrorCode::OverlappingHunks: return "OverlappingHunks";
    case ErrorCode::NoChange: return "NoChange";
    case ErrorCode::EmptyLog: return "EmptyLog";
    case ErrorCode::ScheduledFailure: return "ScheduledFailure";
    case ErrorCode::UnknownInstruction: return "UnknownInstruction";
    case ErrorCode::TraceParseError: return "TraceParseError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::ProtocolError: return "ProtocolError";
    case ErrorCode::BindError: return "BindError";
  }
  return "Unknown";
}

}  // namespace codeassist
