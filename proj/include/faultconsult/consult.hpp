#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "faultconsult/domain.hpp"
#include "faultconsult/error.hpp"
#include "faultconsult/llm.hpp"

namespace faultconsult {

enum class Strategy { multi_round, single_shot, cot };

std::string_view to_token(Strategy strategy);
std::optional<Strategy> strategy_from_token(std::string_view token);
// Default row name in reports ("Multi-round", "Single-shot", "CoT").
std::string_view display_name(Strategy strategy);

enum class Phase { summary, analysis, action, single };

std::string_view to_token(Phase phase);

// Phase sequence a strategy runs.
std::vector<Phase> phases_for(Strategy strategy);

struct PhaseRecord {
  Phase phase = Phase::single;
  std::optional<std::string> operator_note;
  std::string prompt;
  std::string response;
  int retries_used = 0;

  bool operator==(const PhaseRecord&) const = default;
};

struct ConsultationTranscript {
  std::string session_id;
  std::string machine_id;
  Strategy strategy = Strategy::multi_round;
  std::vector<PhaseRecord> phases;
  std::vector<ChatMessage> messages;

  bool operator==(const ConsultationTranscript&) const = default;
};

enum class DiagnosisWarning {
  ConfidenceClamped,
  UnknownLabelToken,
  FallbackSynonymScan,
  NoDiagnosisFound,
  NoNumberedActions,
};

std::string_view code_name(DiagnosisWarning warning);

inline constexpr double kFallbackConfidence = 0.5;

struct ExtractedDiagnosis {
  FaultLabel label = FaultLabel::unknown;
  double confidence = 0.0;
  std::vector<DiagnosisWarning> warnings;
};

// Total. Scans lines bottom-up for `FAULT: <token> | CONFIDENCE: <number>`
// (case-insensitive keywords, flexible whitespace); falls back to a synonym
// scan of the whole text at confidence 0.5; otherwise unknown at 0.0.
ExtractedDiagnosis extract_diagnosis(std::string_view response_text);

// Numbered lines (`1. ...` or `1) ...`). When there are none, bullet lines,
// then the whole trimmed text, are used and NoNumberedActions is reported.
std::vector<std::string> extract_actions(std::string_view response_text, std::vector<DiagnosisWarning>& warnings);

struct DiagnosisResult {
  FaultLabel label = FaultLabel::unknown;
  double confidence = 0.0;  // the consulted model's self-reported confidence
  std::string rationale;
  std::vector<std::string> actions;
  std::vector<DiagnosisWarning> parse_warnings;

  bool operator==(const DiagnosisResult&) const = default;
};

struct ConsultConfig {
  std::string model = "gpt-4";
  double temperature = 0.0;
  int max_retries_per_phase = 2;
  // Used by run_consultation; multi_round only.
  std::optional<std::string> note_before_analysis;
  std::optional<std::string> note_before_action;
};

// Human-readable context line for the prompt of the phase at `index`.
std::string history_digest(Strategy strategy, std::size_t index);

// Deterministic template instantiation. The first line is the phase marker;
// a note is appended as an `Operator context:` paragraph.
std::string build_phase_prompt(PhaseMarker marker, const MachineRecord& machine, std::string_view summary_text,
                               std::string_view history, std::optional<std::string_view> operator_note);

// 128-bit random identifier as 32 lowercase hex characters.
std::string random_session_id();

// One consultation, advanced phase by phase. Not internally synchronized;
// confine to one thread at a time.
class ConsultationSession {
 public:
  ConsultationSession(const MachineRecord& machine, Strategy strategy, std::shared_ptr<ChatBackend> backend,
                      ConsultConfig config, std::string session_id = random_session_id());

  std::size_t phase_count() const { return plan_.size(); }
  std::size_t phases_done() const { return transcript_.phases.size(); }
  bool complete() const { return phases_done() == phase_count(); }
  bool failed() const { return failed_; }
  std::optional<Phase> next_phase() const;

  // Runs exactly one phase. Notes are accepted only before analysis and
  // action (InvalidRequest otherwise). Transient backend failures
  // (TransportError, EmptyCompletion) are retried up to the configured
  // bound; any error that escapes marks the session failed.
  const PhaseRecord& advance(std::optional<std::string> operator_note = std::nullopt);

  const ConsultationTranscript& transcript() const { return transcript_; }
  // Present once the analysis (or single) phase has completed.
  const std::optional<DiagnosisResult>& diagnosis() const { return diagnosis_; }
  // DiagnosisUnparseable when the response yielded no usable label.
  std::optional<ErrorCode> diagnosis_error() const;
  const std::string& summary_text() const { return summary_text_; }

 private:
  MachineRecord header_;  // identity fields only
  Strategy strategy_;
  std::shared_ptr<ChatBackend> backend_;
  ConsultConfig config_;
  std::vector<Phase> plan_;
  std::string summary_text_;
  ConsultationTranscript transcript_;
  std::optional<DiagnosisResult> diagnosis_;
  bool failed_ = false;
};

struct ConsultationOutcome {
  ConsultationTranscript transcript;
  DiagnosisResult diagnosis;
  std::optional<ErrorCode> error;  // DiagnosisUnparseable
};

// Stable id for batch sessions: 32 hex chars of SHA-256(strategy, machine_id).
std::string deterministic_session_id(std::string_view machine_id, Strategy strategy);

// Runs every phase of `strategy`. Backend errors propagate. The session id
// defaults to deterministic_session_id so repeated runs are byte-identical.
ConsultationOutcome run_consultation(const MachineRecord& machine, Strategy strategy,
                                     std::shared_ptr<ChatBackend> backend, const ConsultConfig& config,
                                     std::optional<std::string> session_id = std::nullopt);

}  // namespace faultconsult
