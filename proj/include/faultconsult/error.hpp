#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace faultconsult {

// Stable, machine-readable failure codes. The names returned by code_name()
// appear in JSON payloads, persisted records, and CLI diagnostics.
enum class ErrorCode {
  IoError,
  ParseError,
  DuplicateMachineId,
  UnknownVersion,
  NonMonotonicTimestamps,
  NonFiniteValue,
  TooShort,
  EmptyText,
  GoldLabelUnknown,
  InvalidRecord,
  ConfigInvalid,
  MissingRotationFrequency,
  FrequencyOutOfRange,
  InvalidRequest,
  TransportError,
  ApiError,
  ReplayMiss,
  EmptyCompletion,
  UnknownPhaseMarker,
  DiagnosisUnparseable,
  PhaseProtocolViolation,
  JudgeUnparseable,
  ScoreOutOfRange,
  ConfigError,
  EmptyInput,
  MissingStrategy,
  UnknownMachine,
  BackendUnavailable,
  SessionComplete,
  SessionBusy,
  SessionFailed,
  UnknownSession,
  UnknownJob,
};

std::string_view code_name(ErrorCode code);

// True for failures raised by a chat backend (live, scripted, or oracle).
bool is_backend_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::optional<std::size_t> line = std::nullopt)
      : std::runtime_error(message), code_(code), line_(line) {}

  ErrorCode code() const noexcept { return code_; }
  // 1-based line for parse failures.
  std::optional<std::size_t> line() const noexcept { return line_; }
  const std::string& machine_id() const noexcept { return machine_id_; }

  // Returns a copy tagged with the machine the failure belongs to.
  Error with_machine(std::string machine_id) const;

 private:
  ErrorCode code_;
  std::optional<std::size_t> line_;
  std::string machine_id_;
};

}  // namespace faultconsult
