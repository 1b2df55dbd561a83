#include "artjoint/error.hpp"

namespace artjoint {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::MissingModule: return "MissingModule";
    case ErrorCode::InvalidLimits: return "InvalidLimits";
    case ErrorCode::CyclicStructure: return "CyclicStructure";
    case ErrorCode::NonUnitAxis: return "NonUnitAxis";
    case ErrorCode::InvalidAsset: return "InvalidAsset";
    case ErrorCode::UnknownJoint: return "UnknownJoint";
    case ErrorCode::UnknownMarker: return "UnknownMarker";
    case ErrorCode::NonPositiveDt: return "NonPositiveDt";
    case ErrorCode::TimestepTooLarge: return "TimestepTooLarge";
    case ErrorCode::UnresolvedReference: return "UnresolvedReference";
    case ErrorCode::SignalLoopDetected: return "SignalLoopDetected";
    case ErrorCode::InvalidScenario: return "InvalidScenario";
    case ErrorCode::DisjointTimeSpans: return "DisjointTimeSpans";
    case ErrorCode::MismatchedChannels: return "MismatchedChannels";
    case ErrorCode::MalformedCsv: return "MalformedCsv";
    case ErrorCode::ActionOutOfBounds: return "ActionOutOfBounds";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::InvalidProblem: return "InvalidProblem";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, std::string context, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message +
                         (context.empty() ? "" : " [" + context + "]")),
      code_(code),
      context_(std::move(context)),
      message_(message) {}

}  // namespace artjoint
