#include "faultconsult/judge.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "faultconsult/assets.hpp"
#include "faultconsult/error.hpp"

namespace faultconsult {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_number(std::string_view s) {
  std::size_t i = 0;
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
  std::size_t digits = 0;
  while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i, ++digits;
  if (i < s.size() && s[i] == '.') {
    ++i;
    while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i, ++digits;
  }
  if (digits == 0 || i != s.size()) return std::nullopt;
  return std::strtod(std::string(s).c_str(), nullptr);
}

double round4(double v) { return std::floor(v * 10000.0 + 0.5) / 10000.0; }

class FixedJudge final : public ChatBackend {
 public:
  explicit FixedJudge(std::string answer) : answer_(std::move(answer)) {}
  std::string complete(const ChatRequest& request) override {
    validate_request(request);
    return answer_;
  }
  std::string_view kind() const override { return "scripted"; }

 private:
  std::string answer_;
};

std::string score_text(double v) {
  char buf[32];
  const double cents = v * 100.0;
  if (std::abs(cents - std::round(cents)) < 1e-9) {
    std::snprintf(buf, sizeof buf, "%.2f", v);
  } else {
    std::snprintf(buf, sizeof buf, "%.4f", v);
  }
  return buf;
}

}  // namespace

std::string_view code_name(JudgeWarning warning) {
  switch (warning) {
    case JudgeWarning::ContextClamped: return "ContextClamped";
    case JudgeWarning::ConfidenceClamped: return "ConfidenceClamped";
    case JudgeWarning::ActionabilityClamped: return "ActionabilityClamped";
  }
  return "Unknown";
}

std::optional<ParsedJudgeScores> parse_judge_output(std::string_view text) {
  struct Slot {
    std::string_view key;
    JudgeWarning warning;
    std::optional<double> value;
  };
  Slot slots[3] = {{"CONTEXT:", JudgeWarning::ContextClamped, {}},
                   {"CONFIDENCE:", JudgeWarning::ConfidenceClamped, {}},
                   {"ACTIONABILITY:", JudgeWarning::ActionabilityClamped, {}}};

  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string_view line = trim(text.substr(start, nl - start));
    for (Slot& slot : slots) {
      if (line.starts_with(slot.key)) {
        if (auto v = parse_number(trim(line.substr(slot.key.size())))) slot.value = v;
      }
    }
    start = nl + 1;
  }

  ParsedJudgeScores out;
  double* targets[3] = {&out.scores.context, &out.scores.fault_confidence, &out.scores.actionability};
  for (int i = 0; i < 3; ++i) {
    if (!slots[i].value) return std::nullopt;
    double v = *slots[i].value;
    if (!(v >= 0.0 && v <= 1.0)) {
      v = v > 1.0 ? 1.0 : 0.0;
      out.warnings.push_back(slots[i].warning);
    }
    *targets[i] = round4(v);
  }
  return out;
}

std::string build_judge_prompt(const ConsultationTranscript& transcript, FaultLabel gold_label) {
  std::string body;
  for (const ChatMessage& m : transcript.messages) {
    body += "[" + std::string(to_token(m.role)) + "]\n";
    body += m.content;
    if (body.back() != '\n') body += '\n';
    body += '\n';
  }
  return render_template(asset("judge_rubric"),
                         {{"gold_label", std::string(to_token(gold_label))}, {"transcript", body}});
}

JudgeOutcome judge_transcript(const ConsultationTranscript& transcript, FaultLabel gold_label,
                              ChatBackend& judge_backend, const JudgeConfig& config) {
  ChatRequest request;
  request.model = config.model;
  request.temperature = config.temperature;
  request.messages.push_back({Role::user, build_judge_prompt(transcript, gold_label)});

  JudgeOutcome outcome;
  for (;;) {
    const std::string answer = judge_backend.complete(request);
    if (auto parsed = parse_judge_output(answer)) {
      outcome.scores = parsed->scores;
      outcome.warnings = std::move(parsed->warnings);
      return outcome;
    }
    if (outcome.retries_used >= config.max_retries) {
      throw Error(ErrorCode::JudgeUnparseable,
                  "judge output unparseable after " + std::to_string(outcome.retries_used) + " retries");
    }
    ++outcome.retries_used;
    request.messages.push_back({Role::assistant, answer.empty() ? std::string("(empty)") : answer});
    request.messages.push_back({Role::user, std::string(asset("judge_reminder"))});
  }
}

std::string format_judge_answer(const JudgeScores& s) {
  return "CONTEXT: " + score_text(s.context) + "\nCONFIDENCE: " + score_text(s.fault_confidence) +
         "\nACTIONABILITY: " + score_text(s.actionability);
}

std::shared_ptr<ChatBackend> scripted_judge(JudgeScores fixed) {
  for (double v : {fixed.context, fixed.fault_confidence, fixed.actionability}) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorCode::ScoreOutOfRange, "judge score " + std::to_string(v) + " outside [0, 1]");
    }
  }
  return std::make_shared<FixedJudge>(format_judge_answer(fixed));
}

}  // namespace faultconsult
