#include <random>
#include <set>

#include "doctest.h"
#include "faultconsult/consult.hpp"
#include "faultconsult/error.hpp"
#include "faultconsult/summarize.hpp"
#include "faultconsult/synthgen.hpp"
#include "support.hpp"

using namespace faultconsult;

namespace {

std::shared_ptr<ChatBackend> oracle_for(const MachineRecord& m) {
  return std::make_shared<OracleBackend>(fixed_label_provider(oracle_diagnose(m)));
}

// Answers each phase with a fixed text.
std::shared_ptr<fctest::LambdaBackend> phase_script(std::string summary, std::string analysis, std::string action,
                                                    std::string single = "") {
  return std::make_shared<fctest::LambdaBackend>([=](const ChatRequest& r) -> std::string {
    switch (*find_marker(r.messages.back().content)) {
      case PhaseMarker::summary: return summary;
      case PhaseMarker::analysis: return analysis;
      case PhaseMarker::action: return action;
      default: return single;
    }
  });
}

bool is_prefix(const std::vector<ChatMessage>& a, const std::vector<ChatMessage>& b) {
  return a.size() <= b.size() && std::equal(a.begin(), a.end(), b.begin());
}

std::string strip_label_choice(const std::string& text) {
  std::string out;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string::npos) nl = text.size();
    const std::string line = text.substr(start, nl - start);
    if (line.rfind("Choose exactly one of these labels", 0) != 0) out += line + "\n";
    start = nl + 1;
  }
  return out;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected faultconsult::Error");
  return ErrorCode::IoError;
}

}  // namespace

TEST_SUITE("consult") {
  TEST_CASE("extract_diagnosis examples") {
    auto d = extract_diagnosis("The shaft is off.\nFAULT: misalignment | CONFIDENCE: 0.90");
    CHECK(d.label == FaultLabel::misalignment);
    CHECK(d.confidence == 0.90);
    CHECK(d.warnings.empty());

    d = extract_diagnosis("FAULT: gremlins | CONFIDENCE: 1.7");
    CHECK(d.label == FaultLabel::unknown);
    CHECK(d.confidence == 1.0);
    CHECK(d.warnings == std::vector{DiagnosisWarning::ConfidenceClamped, DiagnosisWarning::UnknownLabelToken});

    d = extract_diagnosis("all systems nominal");
    CHECK(d.label == FaultLabel::unknown);
    CHECK(d.confidence == 0.0);
    CHECK(d.warnings == std::vector{DiagnosisWarning::NoDiagnosisFound});

    d = extract_diagnosis("machine appears healthy");
    CHECK(d.label == FaultLabel::normal);
    CHECK(d.confidence == 0.5);
    CHECK(d.warnings == std::vector{DiagnosisWarning::FallbackSynonymScan});
  }

  TEST_CASE("extract_diagnosis grammar details") {
    CHECK(extract_diagnosis("fault :  Bearing Wear|confidence:.8").label == FaultLabel::bearing_wear);
    CHECK(extract_diagnosis("fault :  Bearing Wear|confidence:.8").confidence == 0.8);
    // The last trailer wins.
    auto d = extract_diagnosis("FAULT: normal | CONFIDENCE: 0.2\nthen\nFAULT: overheating | CONFIDENCE: 0.7\n");
    CHECK(d.label == FaultLabel::overheating);
    CHECK(d.confidence == 0.7);
    d = extract_diagnosis("FAULT: normal | CONFIDENCE: -3");
    CHECK(d.confidence == 0.0);
    CHECK(d.warnings == std::vector{DiagnosisWarning::ConfidenceClamped});
    d = extract_diagnosis("FAULT: normal | CONFIDENCE: 1e400");
    CHECK(d.confidence == 1.0);
    // A malformed trailer falls back to the synonym scan of the whole text.
    d = extract_diagnosis("FAULT: overheating | CONFIDENCE: high");
    CHECK(d.label == FaultLabel::overheating);
    CHECK(d.confidence == 0.5);
    CHECK(d.warnings == std::vector{DiagnosisWarning::FallbackSynonymScan});
  }

  TEST_CASE("extract_diagnosis is total on random bytes") {
    std::mt19937_64 gen(31337);
    for (int trial = 0; trial < 10000; ++trial) {
      std::string text(gen() % 200, '\0');
      for (char& c : text) c = static_cast<char>(gen() & 0xFF);
      if (trial % 3 == 0) text = "FAULT: " + text + " | CONFIDENCE: " + std::to_string(static_cast<int>(gen() % 5) - 2);
      const auto d = extract_diagnosis(text);
      CHECK(std::find(kAllLabels.begin(), kAllLabels.end(), d.label) != kAllLabels.end());
      CHECK(d.confidence >= 0.0);
      CHECK(d.confidence <= 1.0);
    }
  }

  TEST_CASE("extract_actions") {
    std::vector<DiagnosisWarning> w;
    auto a = extract_actions("Plan:\n1. Align the shaft.\n2) Check soft foot.\n10. Re-measure.\nFAULT: x | CONFIDENCE: 1", w);
    CHECK(a == std::vector<std::string>{"Align the shaft.", "Check soft foot.", "Re-measure."});
    CHECK(w.empty());

    a = extract_actions("- grease it\n* inspect it\n", w);
    CHECK(a == std::vector<std::string>{"grease it", "inspect it"});
    CHECK(w == std::vector{DiagnosisWarning::NoNumberedActions});

    w.clear();
    a = extract_actions("Replace the fan.\nFAULT: overheating | CONFIDENCE: 0.9", w);
    CHECK(a == std::vector<std::string>{"Replace the fan."});
    CHECK(w == std::vector{DiagnosisWarning::NoNumberedActions});

    w.clear();
    CHECK(extract_actions("1.5 mm shim\n2024. A year", w) == std::vector<std::string>{"1.5 mm shim\n2024. A year"});
  }

  TEST_CASE("oracle end to end: overheating machine") {
    const auto m = generate_machine(13, FaultLabel::overheating, SynthConfig{}, "H-1");
    const auto multi = run_consultation(m, Strategy::multi_round, oracle_for(m), ConsultConfig{});
    CHECK(multi.diagnosis.label == FaultLabel::overheating);
    CHECK(multi.diagnosis.confidence == 0.95);
    CHECK(multi.transcript.phases.size() == 3);
    CHECK(!multi.error);
    CHECK(multi.diagnosis.actions.size() == 3);
    CHECK(multi.diagnosis.rationale.find("FAULT:") == std::string::npos);

    const auto single = run_consultation(m, Strategy::single_shot, oracle_for(m), ConsultConfig{});
    CHECK(single.diagnosis.label == FaultLabel::overheating);
    CHECK(single.transcript.phases.size() == 1);
    CHECK(single.diagnosis.actions.size() == 3);
  }

  TEST_CASE("free-text analysis falls back to the synonym scan") {
    const auto m = generate_machine(2, FaultLabel::bearing_wear, SynthConfig{}, "B-1");
    const std::string done = "Patterns noted.";
    const std::string actions = "1. Replace the bearing.";
    auto out = run_consultation(m, Strategy::multi_round,
                                phase_script(done, "the worn bearing is badly damaged", actions), ConsultConfig{});
    CHECK(out.diagnosis.label == FaultLabel::bearing_wear);
    CHECK(out.diagnosis.confidence == 0.5);
    CHECK(out.diagnosis.parse_warnings == std::vector{DiagnosisWarning::FallbackSynonymScan});

    // "worn" on its own is not in the synonym table.
    out = run_consultation(m, Strategy::multi_round, phase_script(done, "the bearing is badly worn", actions),
                           ConsultConfig{});
    CHECK(out.diagnosis.label == FaultLabel::unknown);
    CHECK(out.error == ErrorCode::DiagnosisUnparseable);
  }

  TEST_CASE("phase protocol for arbitrary seeds") {
    std::mt19937_64 gen(5);
    for (int trial = 0; trial < 24; ++trial) {
      const std::uint64_t seed = gen();
      const FaultLabel label = kGoldLabels[trial % 4];
      const auto m = generate_machine(seed, label, SynthConfig{}, "P-" + std::to_string(trial));
      for (Strategy s : {Strategy::multi_round, Strategy::single_shot, Strategy::cot}) {
        ConsultationSession session(m, s, oracle_for(m), ConsultConfig{});
        std::vector<std::vector<ChatMessage>> snapshots;
        while (!session.complete()) {
          session.advance();
          snapshots.push_back(session.transcript().messages);
        }
        std::vector<Phase> phases;
        for (const auto& p : session.transcript().phases) phases.push_back(p.phase);
        CHECK(phases == phases_for(s));
        for (std::size_t i = 1; i < snapshots.size(); ++i) CHECK(is_prefix(snapshots[i - 1], snapshots[i]));

        // Without notes the message list is exactly prompt, response per phase.
        const auto& msgs = session.transcript().messages;
        REQUIRE(msgs.size() == 2 * phases.size());
        for (std::size_t i = 0; i < phases.size(); ++i) {
          CHECK(msgs[2 * i] == ChatMessage{Role::user, session.transcript().phases[i].prompt});
          CHECK(msgs[2 * i + 1] == ChatMessage{Role::assistant, session.transcript().phases[i].response});
        }
        CHECK(session.diagnosis()->label == label);
      }
    }
    CHECK(phases_for(Strategy::multi_round) == std::vector{Phase::summary, Phase::analysis, Phase::action});
    CHECK(phases_for(Strategy::cot) == std::vector{Phase::single});
  }

  TEST_CASE("diagnosis is present only after analysis") {
    const auto m = generate_machine(1, FaultLabel::misalignment, SynthConfig{}, "D-1");
    ConsultationSession s(m, Strategy::multi_round, oracle_for(m), ConsultConfig{});
    CHECK(s.next_phase() == Phase::summary);
    s.advance();
    CHECK(!s.diagnosis());
    s.advance();
    REQUIRE(s.diagnosis());
    CHECK(s.diagnosis()->actions.empty());
    s.advance();
    CHECK(s.diagnosis()->actions.size() == 3);
    CHECK(!s.next_phase());
    CHECK(code_of([&] { s.advance(); }) == ErrorCode::SessionComplete);
  }

  TEST_CASE("prompts never reveal the gold label") {
    for (FaultLabel label : kGoldLabels) {
      auto m = generate_machine(21, label, SynthConfig{}, "L-1");
      for (Strategy s : {Strategy::multi_round, Strategy::single_shot, Strategy::cot}) {
        const auto out = run_consultation(m, s, oracle_for(m), ConsultConfig{});
        auto relabeled = m;
        relabeled.gold_label = label == FaultLabel::normal ? FaultLabel::overheating : FaultLabel::normal;
        const auto again = run_consultation(relabeled, s, oracle_for(m), ConsultConfig{});
        CHECK(out.transcript == again.transcript);
        for (const auto& p : out.transcript.phases) {
          CAPTURE(p.prompt);
          CHECK(parse_fault_label(strip_label_choice(p.prompt)) == FaultLabel::unknown);
        }
      }
    }
  }

  TEST_CASE("prompt construction") {
    const auto m = generate_machine(4, FaultLabel::normal, SynthConfig{}, "N-1");
    const std::string summary = render_summary_text(m, summarize_machine(m));
    const std::string p1 = build_phase_prompt(PhaseMarker::summary, m, summary, history_digest(Strategy::multi_round, 0),
                                              std::nullopt);
    CHECK(p1.rfind("<!--phase:summary-->\n", 0) == 0);
    CHECK(p1.find(summary) != std::string::npos);
    CHECK(p1 == build_phase_prompt(PhaseMarker::summary, m, summary, history_digest(Strategy::multi_round, 0),
                                   std::nullopt));
    const std::string p2 = build_phase_prompt(PhaseMarker::analysis, m, "", history_digest(Strategy::multi_round, 1),
                                              std::string_view("grease replaced last week"));
    CHECK(p2.rfind("<!--phase:analysis-->\n", 0) == 0);
    CHECK(p2.find("Operator context: grease replaced last week") != std::string::npos);
  }

  TEST_CASE("operator notes") {
    const auto m = generate_machine(8, FaultLabel::misalignment, SynthConfig{}, "O-1");
    ConsultConfig config;
    config.note_before_analysis = "vibration started after belt change";
    config.note_before_action = "spare coupling on hand";
    const auto out = run_consultation(m, Strategy::multi_round, oracle_for(m), config);
    REQUIRE(out.transcript.phases.size() == 3);
    CHECK(out.transcript.phases[1].operator_note == config.note_before_analysis);
    CHECK(out.transcript.phases[1].prompt.find("vibration started after belt change") != std::string::npos);
    CHECK(out.transcript.phases[2].prompt.find("spare coupling on hand") != std::string::npos);
    CHECK(out.transcript.messages.size() == 8);
    CHECK(out.transcript.messages[2] == ChatMessage{Role::user, "Operator context: vibration started after belt change"});

    ConsultationSession s(m, Strategy::multi_round, oracle_for(m), ConsultConfig{});
    CHECK(code_of([&] { s.advance("too early"); }) == ErrorCode::InvalidRequest);
    CHECK(s.phases_done() == 0);
    CHECK(!s.failed());

    ConsultConfig baseline_notes;
    baseline_notes.note_before_analysis = "x";
    CHECK(code_of([&] { run_consultation(m, Strategy::cot, oracle_for(m), baseline_notes); }) ==
          ErrorCode::InvalidRequest);
  }

  TEST_CASE("transient failures are retried within the bound") {
    const auto m = generate_machine(8, FaultLabel::normal, SynthConfig{}, "R-1");
    auto oracle = oracle_for(m);
    int failures_left = 2;
    auto flaky = std::make_shared<fctest::LambdaBackend>([&](const ChatRequest& r) -> std::string {
      if (failures_left-- > 0) throw Error(ErrorCode::TransportError, "flaky");
      return oracle->complete(r);
    });
    ConsultationSession s(m, Strategy::single_shot, flaky, ConsultConfig{});
    CHECK(s.advance().retries_used == 2);
    CHECK(flaky->calls() == 3);

    failures_left = 3;
    auto empty = std::make_shared<fctest::LambdaBackend>([&](const ChatRequest& r) -> std::string {
      if (failures_left-- > 0) return "";
      return oracle->complete(r);
    });
    ConsultationSession s2(m, Strategy::single_shot, empty, ConsultConfig{});
    CHECK(code_of([&] { s2.advance(); }) == ErrorCode::EmptyCompletion);
    CHECK(empty->calls() == 3);
    CHECK(s2.failed());
    CHECK(code_of([&] { s2.advance(); }) == ErrorCode::SessionFailed);

    auto api = std::make_shared<fctest::LambdaBackend>(
        [](const ChatRequest&) -> std::string { throw Error(ErrorCode::ApiError, "401"); });
    ConsultationSession s3(m, Strategy::single_shot, api, ConsultConfig{});
    CHECK(code_of([&] { s3.advance(); }) == ErrorCode::ApiError);
    CHECK(api->calls() == 1);
  }

  TEST_CASE("unparseable diagnosis is reported") {
    const auto m = generate_machine(8, FaultLabel::normal, SynthConfig{}, "U-1");
    const auto out =
        run_consultation(m, Strategy::single_shot, phase_script("", "", "", "no idea, sorry"), ConsultConfig{});
    CHECK(out.diagnosis.label == FaultLabel::unknown);
    CHECK(out.error == ErrorCode::DiagnosisUnparseable);
  }

  TEST_CASE("session ids") {
    std::set<std::string> ids;
    for (int i = 0; i < 200; ++i) {
      const std::string id = random_session_id();
      CHECK(id.size() == 32);
      CHECK(id.find_first_not_of("0123456789abcdef") == std::string::npos);
      ids.insert(id);
    }
    CHECK(ids.size() == 200);
    CHECK(deterministic_session_id("M1", Strategy::cot) == deterministic_session_id("M1", Strategy::cot));
    CHECK(deterministic_session_id("M1", Strategy::cot) != deterministic_session_id("M1", Strategy::multi_round));
    CHECK(deterministic_session_id("M1", Strategy::cot).size() == 32);
  }

  TEST_CASE("repeated runs are byte-identical") {
    const auto m = generate_machine(30, FaultLabel::bearing_wear, SynthConfig{}, "Z-1");
    const auto a = run_consultation(m, Strategy::multi_round, oracle_for(m), ConsultConfig{});
    const auto b = run_consultation(m, Strategy::multi_round, oracle_for(m), ConsultConfig{});
    CHECK(a.transcript == b.transcript);
    CHECK(a.diagnosis == b.diagnosis);
  }
}
