#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace codeassist {

enum class ErrorCode {
  UnknownFile,
  OutOfBounds,
  DuplicateRequest,
  UnknownRequest,
  ResponseForCompletedEntry,
  MalformedRange,
  CursorSectionOverBudget,
  SyntaxError,
  EmptyScript,
  AnchorNotFound,
  AmbiguousAnchor,
  OverlappingHunks,
  NoChange,
  EmptyLog,
  ScheduledFailure,
  UnknownInstruction,
  TraceParseError,
  ConfigError,
  ProtocolError,
  BindError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// The single exception type thrown by the engine. Callers switch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace codeassist
