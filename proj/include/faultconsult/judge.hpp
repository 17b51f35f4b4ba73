#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "faultconsult/consult.hpp"
#include "faultconsult/llm.hpp"

namespace faultconsult {

struct JudgeScores {
  double context = 0.0;
  double fault_confidence = 0.0;
  double actionability = 0.0;

  bool operator==(const JudgeScores&) const = default;
};

enum class JudgeWarning { ContextClamped, ConfidenceClamped, ActionabilityClamped };

std::string_view code_name(JudgeWarning warning);

struct ParsedJudgeScores {
  JudgeScores scores;
  std::vector<JudgeWarning> warnings;
};

// Requires one line each of `CONTEXT: x`, `CONFIDENCE: x`, `ACTIONABILITY: x`
// (exact uppercase keywords; the last occurrence of each wins). Values are
// clamped to [0, 1] and rounded half-up to 4 decimals. nullopt when any
// line is missing or malformed.
std::optional<ParsedJudgeScores> parse_judge_output(std::string_view text);

struct JudgeConfig {
  std::string model = "gpt-4";
  double temperature = 0.0;
  int max_retries = 2;
};

struct JudgeOutcome {
  JudgeScores scores;
  std::vector<JudgeWarning> warnings;
  int retries_used = 0;
};

// The judge prompt: rubric, reference label, and the full transcript.
std::string build_judge_prompt(const ConsultationTranscript& transcript, FaultLabel gold_label);

// One judge request; malformed output is retried with a format reminder up
// to config.max_retries times, then JudgeUnparseable. Backend errors
// propagate unchanged.
JudgeOutcome judge_transcript(const ConsultationTranscript& transcript, FaultLabel gold_label,
                              ChatBackend& judge_backend, const JudgeConfig& config = {});

// Backend that always answers with the three score lines for `fixed`.
// Throws ScoreOutOfRange if any score lies outside [0, 1].
std::shared_ptr<ChatBackend> scripted_judge(JudgeScores fixed);

// Three-line judge answer for `scores`, two decimals unless more are needed.
std::string format_judge_answer(const JudgeScores& scores);

}  // namespace faultconsult
