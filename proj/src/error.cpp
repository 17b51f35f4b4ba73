#include "faultconsult/error.hpp"

namespace faultconsult {

std::string_view code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DuplicateMachineId: return "DuplicateMachineId";
    case ErrorCode::UnknownVersion: return "UnknownVersion";
    case ErrorCode::NonMonotonicTimestamps: return "NonMonotonicTimestamps";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::EmptyText: return "EmptyText";
    case ErrorCode::GoldLabelUnknown: return "GoldLabelUnknown";
    case ErrorCode::InvalidRecord: return "InvalidRecord";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::MissingRotationFrequency: return "MissingRotationFrequency";
    case ErrorCode::FrequencyOutOfRange: return "FrequencyOutOfRange";
    case ErrorCode::InvalidRequest: return "InvalidRequest";
    case ErrorCode::TransportError: return "TransportError";
    case ErrorCode::ApiError: return "ApiError";
    case ErrorCode::ReplayMiss: return "ReplayMiss";
    case ErrorCode::EmptyCompletion: return "EmptyCompletion";
    case ErrorCode::UnknownPhaseMarker: return "UnknownPhaseMarker";
    case ErrorCode::DiagnosisUnparseable: return "DiagnosisUnparseable";
    case ErrorCode::PhaseProtocolViolation: return "PhaseProtocolViolation";
    case ErrorCode::JudgeUnparseable: return "JudgeUnparseable";
    case ErrorCode::ScoreOutOfRange: return "ScoreOutOfRange";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::MissingStrategy: return "MissingStrategy";
    case ErrorCode::UnknownMachine: return "UnknownMachine";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::SessionComplete: return "SessionComplete";
    case ErrorCode::SessionBusy: return "SessionBusy";
    case ErrorCode::SessionFailed: return "SessionFailed";
    case ErrorCode::UnknownSession: return "UnknownSession";
    case ErrorCode::UnknownJob: return "UnknownJob";
  }
  return "Unknown";
}

bool is_backend_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::TransportError:
    case ErrorCode::ApiError:
    case ErrorCode::ReplayMiss:
    case ErrorCode::EmptyCompletion:
    case ErrorCode::UnknownPhaseMarker:
      return true;
    default:
      return false;
  }
}

Error Error::with_machine(std::string machine_id) const {
  std::string message = what();
  if (machine_id_.empty()) message = "machine " + machine_id + ": " + message;
  Error copy(code_, message, line_);
  copy.machine_id_ = std::move(machine_id);
  return copy;
}

}  // namespace faultconsult
