#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace artjoint {

enum class ErrorCode {
  SyntaxError,
  MissingModule,
  InvalidLimits,
  CyclicStructure,
  NonUnitAxis,
  InvalidAsset,
  UnknownJoint,
  UnknownMarker,
  NonPositiveDt,
  TimestepTooLarge,
  UnresolvedReference,
  SignalLoopDetected,
  InvalidScenario,
  DisjointTimeSpans,
  MismatchedChannels,
  MalformedCsv,
  ActionOutOfBounds,
  InsufficientData,
  InvalidProblem,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries a machine-readable code and
/// a context string (a JSON pointer, a joint id, a file path, ...).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string context, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  const std::string& context() const noexcept { return context_; }
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string context_;
  std::string message_;
};

}  // namespace artjoint
