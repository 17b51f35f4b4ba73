#include "faultconsult/consult.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <random>

#include "faultconsult/assets.hpp"
#include "faultconsult/digest.hpp"
#include "faultconsult/summarize.hpp"

namespace faultconsult {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      out.push_back(text.substr(start));
      break;
    }
    out.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return out;
}

bool consume_keyword(std::string_view& s, std::string_view keyword) {
  if (s.size() < keyword.size()) return false;
  for (std::size_t i = 0; i < keyword.size(); ++i) {
    char c = s[i];
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
    if (c != keyword[i]) return false;
  }
  s.remove_prefix(keyword.size());
  return true;
}

void skip_space(std::string_view& s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
}

// Decimal literal: [+-]? (digits [. digits?] | . digits) ([eE] [+-]? digits)?
std::optional<double> parse_decimal(std::string_view s) {
  std::size_t i = 0;
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
  std::size_t int_digits = 0, frac_digits = 0;
  while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i, ++int_digits;
  if (i < s.size() && s[i] == '.') {
    ++i;
    while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i, ++frac_digits;
  }
  if (int_digits + frac_digits == 0) return std::nullopt;
  if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
    std::size_t j = i + 1;
    if (j < s.size() && (s[j] == '+' || s[j] == '-')) ++j;
    std::size_t exp_digits = 0;
    while (j < s.size() && s[j] >= '0' && s[j] <= '9') ++j, ++exp_digits;
    if (exp_digits == 0) return std::nullopt;
    i = j;
  }
  if (i != s.size()) return std::nullopt;
  const std::string copy(s);
  return std::strtod(copy.c_str(), nullptr);  // overflow yields +/-HUGE_VAL, clamped by the caller
}

struct FaultLine {
  std::string_view token;
  double confidence;
};

std::optional<FaultLine> match_fault_line(std::string_view line) {
  skip_space(line);
  if (!consume_keyword(line, "FAULT")) return std::nullopt;
  skip_space(line);
  if (line.empty() || line.front() != ':') return std::nullopt;
  line.remove_prefix(1);
  const std::size_t bar = line.rfind('|');
  if (bar == std::string_view::npos) return std::nullopt;
  std::string_view token = trim(line.substr(0, bar));
  std::string_view rest = line.substr(bar + 1);
  skip_space(rest);
  if (!consume_keyword(rest, "CONFIDENCE")) return std::nullopt;
  skip_space(rest);
  if (rest.empty() || rest.front() != ':') return std::nullopt;
  rest.remove_prefix(1);
  auto value = parse_decimal(trim(rest));
  if (!value) return std::nullopt;
  return FaultLine{token, *value};
}

std::optional<std::string_view> numbered_item(std::string_view line) {
  line = trim(line);
  std::size_t i = 0;
  while (i < line.size() && line[i] >= '0' && line[i] <= '9') ++i;
  if (i == 0 || i > 3 || i >= line.size() || (line[i] != '.' && line[i] != ')')) return std::nullopt;
  std::string_view body = trim(line.substr(i + 1));
  if (body.empty() || line.size() == i + 1 || !is_space(line[i + 1])) return std::nullopt;
  return body;
}

std::optional<std::string_view> bullet_item(std::string_view line) {
  line = trim(line);
  if (line.size() < 2 || (line[0] != '-' && line[0] != '*') || !is_space(line[1])) return std::nullopt;
  std::string_view body = trim(line.substr(1));
  if (body.empty()) return std::nullopt;
  return body;
}

// Response text with every FAULT trailer line removed.
std::string without_fault_lines(std::string_view text) {
  std::string out;
  for (std::string_view line : lines_of(text)) {
    if (match_fault_line(line)) continue;
    out.append(line);
    out.push_back('\n');
  }
  return std::string(trim(out));
}

constexpr std::string_view kLabelList = "normal, misalignment, bearing_wear, overheating";

PhaseMarker marker_for(Phase phase, Strategy strategy) {
  switch (phase) {
    case Phase::summary: return PhaseMarker::summary;
    case Phase::analysis: return PhaseMarker::analysis;
    case Phase::action: return PhaseMarker::action;
    case Phase::single: return strategy == Strategy::cot ? PhaseMarker::single_cot : PhaseMarker::single;
  }
  return PhaseMarker::single;
}

bool transient(ErrorCode code) { return code == ErrorCode::TransportError || code == ErrorCode::EmptyCompletion; }

}  // namespace

std::string_view to_token(Strategy strategy) {
  switch (strategy) {
    case Strategy::multi_round: return "multi_round";
    case Strategy::single_shot: return "single_shot";
    case Strategy::cot: return "cot";
  }
  return "multi_round";
}

std::optional<Strategy> strategy_from_token(std::string_view token) {
  for (Strategy s : {Strategy::multi_round, Strategy::single_shot, Strategy::cot}) {
    if (to_token(s) == token) return s;
  }
  return std::nullopt;
}

std::string_view display_name(Strategy strategy) {
  switch (strategy) {
    case Strategy::multi_round: return "Multi-round";
    case Strategy::single_shot: return "Single-shot";
    case Strategy::cot: return "CoT";
  }
  return "Multi-round";
}

std::string_view to_token(Phase phase) {
  switch (phase) {
    case Phase::summary: return "summary";
    case Phase::analysis: return "analysis";
    case Phase::action: return "action";
    case Phase::single: return "single";
  }
  return "single";
}

std::vector<Phase> phases_for(Strategy strategy) {
  if (strategy == Strategy::multi_round) return {Phase::summary, Phase::analysis, Phase::action};
  return {Phase::single};
}

std::string_view code_name(DiagnosisWarning warning) {
  switch (warning) {
    case DiagnosisWarning::ConfidenceClamped: return "ConfidenceClamped";
    case DiagnosisWarning::UnknownLabelToken: return "UnknownLabelToken";
    case DiagnosisWarning::FallbackSynonymScan: return "FallbackSynonymScan";
    case DiagnosisWarning::NoDiagnosisFound: return "NoDiagnosisFound";
    case DiagnosisWarning::NoNumberedActions: return "NoNumberedActions";
  }
  return "Unknown";
}

ExtractedDiagnosis extract_diagnosis(std::string_view text) {
  ExtractedDiagnosis out;
  const auto lines = lines_of(text);
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    auto m = match_fault_line(*it);
    if (!m) continue;
    out.confidence = m->confidence;
    if (!(out.confidence >= 0.0 && out.confidence <= 1.0)) {
      out.confidence = out.confidence > 1.0 ? 1.0 : 0.0;
      out.warnings.push_back(DiagnosisWarning::ConfidenceClamped);
    }
    out.label = parse_fault_label(m->token);
    if (out.label == FaultLabel::unknown) out.warnings.push_back(DiagnosisWarning::UnknownLabelToken);
    return out;
  }
  out.label = parse_fault_label(text);
  if (out.label != FaultLabel::unknown) {
    out.confidence = kFallbackConfidence;
    out.warnings.push_back(DiagnosisWarning::FallbackSynonymScan);
  } else {
    out.confidence = 0.0;
    out.warnings.push_back(DiagnosisWarning::NoDiagnosisFound);
  }
  return out;
}

std::vector<std::string> extract_actions(std::string_view text, std::vector<DiagnosisWarning>& warnings) {
  std::vector<std::string> actions;
  const auto lines = lines_of(text);
  for (std::string_view line : lines) {
    if (auto item = numbered_item(line)) actions.emplace_back(*item);
  }
  if (!actions.empty()) return actions;

  warnings.push_back(DiagnosisWarning::NoNumberedActions);
  for (std::string_view line : lines) {
    if (auto item = bullet_item(line)) actions.emplace_back(*item);
  }
  if (actions.empty()) {
    std::string whole = without_fault_lines(text);
    if (!whole.empty()) actions.push_back(std::move(whole));
  }
  return actions;
}

std::string history_digest(Strategy strategy, std::size_t index) {
  if (strategy != Strategy::multi_round) return "Consultation format: single round.";
  switch (index) {
    case 0: return "Consultation round 1 of 3 (data summary).";
    case 1: return "Consultation round 2 of 3 (fault analysis). Earlier rounds: data summary.";
    default: return "Consultation round 3 of 3 (action recommendation). Earlier rounds: data summary, fault analysis.";
  }
}

std::string build_phase_prompt(PhaseMarker marker, const MachineRecord& machine, std::string_view summary_text,
                               std::string_view history, std::optional<std::string_view> operator_note) {
  std::string prompt = render_template(asset(to_token(marker)), {{"marker", marker_line(marker)},
                                                                  {"history", std::string(history)},
                                                                  {"machine_id", machine.machine_id},
                                                                  {"machine_type", machine.machine_type},
                                                                  {"summary", std::string(summary_text)},
                                                                  {"labels", std::string(kLabelList)}});
  if (operator_note) {
    prompt += "\nOperator context: ";
    prompt += *operator_note;
    prompt += "\n";
  }
  return prompt;
}

std::string random_session_id() {
  thread_local std::random_device rd;
  static constexpr char hex[] = "0123456789abcdef";
  std::string id;
  id.reserve(32);
  for (int word = 0; word < 4; ++word) {
    std::uint32_t v = rd();
    for (int nib = 0; nib < 8; ++nib, v >>= 4) id.push_back(hex[v & 0xF]);
  }
  return id;
}

std::string deterministic_session_id(std::string_view machine_id, Strategy strategy) {
  return sha256_hex(std::string(to_token(strategy)) + '\n' + std::string(machine_id)).substr(0, 32);
}

ConsultationSession::ConsultationSession(const MachineRecord& machine, Strategy strategy,
                                         std::shared_ptr<ChatBackend> backend, ConsultConfig config,
                                         std::string session_id)
    : strategy_(strategy), backend_(std::move(backend)), config_(std::move(config)), plan_(phases_for(strategy)) {
  header_.machine_id = machine.machine_id;
  header_.machine_type = machine.machine_type;
  header_.rotation_freq_hz = machine.rotation_freq_hz;
  const auto summaries = summarize_machine(machine);
  summary_text_ = render_summary_text(machine, summaries);
  transcript_.session_id = std::move(session_id);
  transcript_.machine_id = machine.machine_id;
  transcript_.strategy = strategy;
}

std::optional<Phase> ConsultationSession::next_phase() const {
  if (complete()) return std::nullopt;
  return plan_[phases_done()];
}

std::optional<ErrorCode> ConsultationSession::diagnosis_error() const {
  if (diagnosis_ && diagnosis_->label == FaultLabel::unknown) return ErrorCode::DiagnosisUnparseable;
  return std::nullopt;
}

const PhaseRecord& ConsultationSession::advance(std::optional<std::string> operator_note) {
  if (failed_) throw Error(ErrorCode::SessionFailed, "session " + transcript_.session_id + " has failed");
  if (complete()) throw Error(ErrorCode::SessionComplete, "session " + transcript_.session_id + " is complete");
  const std::size_t index = phases_done();
  const Phase phase = plan_[index];
  if (operator_note && phase != Phase::analysis && phase != Phase::action) {
    throw Error(ErrorCode::InvalidRequest, "operator notes are accepted only before the analysis and action phases");
  }
  if (operator_note && operator_note->empty()) operator_note.reset();

  PhaseRecord record;
  record.phase = phase;
  record.operator_note = operator_note;
  std::string_view summary;
  if (phase == Phase::summary || phase == Phase::single) summary = summary_text_;
  record.prompt = build_phase_prompt(marker_for(phase, strategy_), header_, summary, history_digest(strategy_, index),
                                     operator_note ? std::optional<std::string_view>(*operator_note) : std::nullopt);

  ChatRequest request;
  request.model = config_.model;
  request.temperature = config_.temperature;
  request.messages = transcript_.messages;
  if (operator_note) request.messages.push_back({Role::user, "Operator context: " + *operator_note});
  request.messages.push_back({Role::user, record.prompt});

  for (;;) {
    try {
      record.response = backend_->complete(request);
      if (record.response.empty()) throw Error(ErrorCode::EmptyCompletion, "backend returned an empty completion");
      break;
    } catch (const Error& e) {
      if (transient(e.code()) && record.retries_used < config_.max_retries_per_phase) {
        ++record.retries_used;
        continue;
      }
      failed_ = true;
      throw;
    } catch (...) {
      failed_ = true;
      throw;
    }
  }

  request.messages.push_back({Role::assistant, record.response});
  transcript_.messages = std::move(request.messages);

  if (phase == Phase::analysis || phase == Phase::single) {
    const ExtractedDiagnosis d = extract_diagnosis(record.response);
    DiagnosisResult result;
    result.label = d.label;
    result.confidence = d.confidence;
    result.parse_warnings = d.warnings;
    result.rationale = without_fault_lines(record.response);
    diagnosis_ = std::move(result);
  }
  if (phase == Phase::action || phase == Phase::single) {
    if (!diagnosis_) {
      failed_ = true;
      throw Error(ErrorCode::PhaseProtocolViolation, "action phase reached without a diagnosis");
    }
    diagnosis_->actions = extract_actions(record.response, diagnosis_->parse_warnings);
  }

  transcript_.phases.push_back(std::move(record));
  return transcript_.phases.back();
}

ConsultationOutcome run_consultation(const MachineRecord& machine, Strategy strategy,
                                     std::shared_ptr<ChatBackend> backend, const ConsultConfig& config,
                                     std::optional<std::string> session_id) {
  if (strategy != Strategy::multi_round && (config.note_before_analysis || config.note_before_action)) {
    throw Error(ErrorCode::InvalidRequest, "operator notes apply to multi_round consultations only");
  }
  ConsultationSession session(machine, strategy, std::move(backend), config,
                              session_id ? *session_id : deterministic_session_id(machine.machine_id, strategy));
  while (!session.complete()) {
    std::optional<std::string> note;
    if (session.next_phase() == Phase::analysis) note = config.note_before_analysis;
    if (session.next_phase() == Phase::action) note = config.note_before_action;
    session.advance(std::move(note));
  }
  const auto& phases = session.transcript().phases;
  const auto expected = phases_for(strategy);
  if (phases.size() != expected.size()) {
    throw Error(ErrorCode::PhaseProtocolViolation, "transcript phase count mismatch");
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (phases[i].phase != expected[i]) throw Error(ErrorCode::PhaseProtocolViolation, "transcript phase order mismatch");
  }
  return {session.transcript(), *session.diagnosis(), session.diagnosis_error()};
}

}  // namespace faultconsult
