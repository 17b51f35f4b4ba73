#include <random>

#include "doctest.h"
#include "faultconsult/error.hpp"
#include "faultconsult/judge.hpp"
#include "faultconsult/synthgen.hpp"
#include "support.hpp"

using namespace faultconsult;

namespace {

ConsultationTranscript sample_transcript(std::uint64_t seed = 1) {
  const auto m = generate_machine(seed, FaultLabel::misalignment, SynthConfig{}, "J-" + std::to_string(seed));
  auto backend = std::make_shared<OracleBackend>(fixed_label_provider(FaultLabel::misalignment));
  return run_consultation(m, Strategy::multi_round, backend, ConsultConfig{}).transcript;
}

}  // namespace

TEST_SUITE("judge") {
  TEST_CASE("parse the three score lines") {
    const auto p = parse_judge_output("CONTEXT: 0.80\nCONFIDENCE: 0.85\nACTIONABILITY: 0.80");
    REQUIRE(p);
    CHECK(p->scores == JudgeScores{0.80, 0.85, 0.80});
    CHECK(p->warnings.empty());
  }

  TEST_CASE("clamping and rounding") {
    auto p = parse_judge_output("CONTEXT: 1.40\nCONFIDENCE: -0.2\nACTIONABILITY: 0.123456");
    REQUIRE(p);
    CHECK(p->scores.context == 1.0);
    CHECK(p->scores.fault_confidence == 0.0);
    CHECK(p->scores.actionability == 0.1235);
    CHECK(p->warnings == std::vector{JudgeWarning::ContextClamped, JudgeWarning::ConfidenceClamped});

    p = parse_judge_output("CONTEXT: 0.12345\nCONFIDENCE: 0.5\nACTIONABILITY: 1");
    REQUIRE(p);
    CHECK(p->scores.context == 0.1235);  // half-up at the fifth decimal
  }

  TEST_CASE("malformed outputs") {
    CHECK(!parse_judge_output("CONTEXT: 0.8\nCONFIDENCE: 0.8"));
    CHECK(!parse_judge_output("context: 0.8\nconfidence: 0.8\nactionability: 0.8"));
    CHECK(!parse_judge_output("CONTEXT: high\nCONFIDENCE: 0.8\nACTIONABILITY: 0.8"));
    CHECK(!parse_judge_output(""));
    // Surrounding prose is ignored and the last occurrence wins.
    const auto p = parse_judge_output("Scores:\nCONTEXT: 0.1\nCONTEXT: 0.7\n  CONFIDENCE: 0.6 \nACTIONABILITY:0.5\nDone.");
    REQUIRE(p);
    CHECK(p->scores == JudgeScores{0.7, 0.6, 0.5});
  }

  TEST_CASE("parser fuzz keeps scores in range") {
    std::mt19937_64 gen(4242);
    const std::vector<std::string> keys = {"CONTEXT:", "CONFIDENCE:", "ACTIONABILITY:"};
    for (int trial = 0; trial < 10000; ++trial) {
      std::string text;
      if (trial % 2 == 0) {
        for (const auto& k : keys) {
          text += k + " ";
          const int n = static_cast<int>(gen() % 8);
          for (int i = 0; i < n; ++i) text.push_back("0123456789.-+e "[gen() % 15]);
          text += "\n";
        }
      } else {
        text.resize(gen() % 200);
        for (char& c : text) c = static_cast<char>(gen() & 0xFF);
      }
      if (auto p = parse_judge_output(text)) {
        for (double v : {p->scores.context, p->scores.fault_confidence, p->scores.actionability}) {
          CHECK(v >= 0.0);
          CHECK(v <= 1.0);
        }
      }
    }
  }

  TEST_CASE("judge prompt carries the reference label and the transcript") {
    const auto t = sample_transcript();
    const std::string prompt = build_judge_prompt(t, FaultLabel::misalignment);
    CHECK(prompt.find("Reference fault label: misalignment") != std::string::npos);
    for (const auto& m : t.messages) CHECK(prompt.find(m.content) != std::string::npos);
  }

  TEST_CASE("malformed judge output retries exactly twice") {
    auto bad = std::make_shared<fctest::LambdaBackend>([](const ChatRequest&) { return std::string("CONTEXT: 0.5"); });
    try {
      judge_transcript(sample_transcript(), FaultLabel::misalignment, *bad);
      FAIL("expected JudgeUnparseable");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::JudgeUnparseable);
    }
    CHECK(bad->calls() == 3);
    const auto requests = bad->requests();
    REQUIRE(requests.size() == 3);
    CHECK(requests[0].messages.size() == 1);
    CHECK(requests[1].messages.size() == 3);
    CHECK(requests[2].messages.size() == 5);
    CHECK(requests[1].messages[1] == ChatMessage{Role::assistant, "CONTEXT: 0.5"});
  }

  TEST_CASE("a retry can recover") {
    int calls = 0;
    auto flaky = std::make_shared<fctest::LambdaBackend>([&](const ChatRequest&) {
      return ++calls < 3 ? std::string("I think it went well.") : std::string("CONTEXT: 0.9\nCONFIDENCE: 1.2\nACTIONABILITY: 0.7");
    });
    const auto out = judge_transcript(sample_transcript(), FaultLabel::misalignment, *flaky);
    CHECK(out.retries_used == 2);
    CHECK(out.scores == JudgeScores{0.9, 1.0, 0.7});
    CHECK(out.warnings == std::vector{JudgeWarning::ConfidenceClamped});
  }

  TEST_CASE("backend errors propagate without retry") {
    auto down = std::make_shared<fctest::LambdaBackend>(
        [](const ChatRequest&) -> std::string { throw Error(ErrorCode::TransportError, "down"); });
    try {
      judge_transcript(sample_transcript(), FaultLabel::normal, *down);
      FAIL("expected TransportError");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::TransportError);
    }
    CHECK(down->calls() == 1);
  }

  TEST_CASE("scripted judge") {
    auto judge = scripted_judge({0.5, 0.5, 0.5});
    double sum[3] = {0, 0, 0};
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto out = judge_transcript(sample_transcript(seed), FaultLabel::misalignment, *judge);
      CHECK(out.scores == JudgeScores{0.5, 0.5, 0.5});
      sum[0] += out.scores.context;
      sum[1] += out.scores.fault_confidence;
      sum[2] += out.scores.actionability;
    }
    CHECK(sum[0] / 10 == 0.5);
    CHECK(sum[1] / 10 == 0.5);
    CHECK(sum[2] / 10 == 0.5);

    try {
      scripted_judge({1.2, 0.5, 0.5});
      FAIL("expected ScoreOutOfRange");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ScoreOutOfRange);
    }
  }

  TEST_CASE("format_judge_answer round-trips") {
    for (const JudgeScores s : {JudgeScores{0.8, 0.85, 0.8}, JudgeScores{0.1234, 1.0, 0.0}}) {
      const auto p = parse_judge_output(format_judge_answer(s));
      REQUIRE(p);
      CHECK(p->scores == s);
    }
    CHECK(format_judge_answer({0.8, 0.85, 0.8}) == "CONTEXT: 0.80\nCONFIDENCE: 0.85\nACTIONABILITY: 0.80");
  }
}
