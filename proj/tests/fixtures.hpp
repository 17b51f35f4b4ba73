#pragma once

// Fixtures shared by the unit tests and the acceptance runner.

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "faultconsult/evalreport.hpp"
#include "faultconsult/synthgen.hpp"

namespace fctest {

using namespace faultconsult;

// Published comparison figures, as (name, acc, context, confidence,
// actionability, misalignment, bearing wear, overheating).
struct PublishedRow {
  const char* name;
  double acc, context, confidence, actionability, misalignment, bearing_wear, overheating;
};

inline constexpr PublishedRow kPublishedRows[] = {
    {"ChatGPT", 75, 0.65, 0.70, 0.60, 60, 65, 70},
    {"Claude 2", 78, 0.70, 0.75, 0.65, 70, 72, 75},
    {"CoT", 80, 0.75, 0.78, 0.70, 75, 78, 80},
    {"Our Method", 85, 0.80, 0.85, 0.80, 90, 88, 95},
};

inline EvalReport published_report() {
  EvalReport report;
  report.metadata = {"fixture", "fixture", "2024-01-01T00:00:00Z"};
  for (const PublishedRow& row : kPublishedRows) {
    StrategyReport s;
    s.name = row.name;
    s.acc_overall = row.acc;
    s.acc_by_fault = {{FaultLabel::misalignment, row.misalignment},
                      {FaultLabel::bearing_wear, row.bearing_wear},
                      {FaultLabel::overheating, row.overheating}};
    s.macro_average = macro_average(s.acc_by_fault);
    s.mean_judge = JudgeScores{row.context, row.confidence, row.actionability};
    report.strategies.push_back(std::move(s));
  }
  return report;
}

// Twelve machines (three per class) with a hand-written single-shot answer
// for each. Two answers name the wrong fault and one machine has no entry
// at all, so replay fails for it.
struct ForcedCassette {
  std::vector<MachineRecord> machines;
  Cassette cassette;
  std::set<std::string> wrong;    // answered with a wrong label
  std::set<std::string> missing;  // no cassette entry
};

inline ForcedCassette forced_cassette() {
  ForcedCassette out;
  SynthConfig config;
  config.seed = 12;
  config.n_per_class = 3;
  out.machines = generate_dataset(config);
  const std::map<std::string, FaultLabel> overrides = {{"M0001", FaultLabel::normal},
                                                       {"M0006", FaultLabel::overheating}};
  out.missing = {"M0011"};
  for (const auto& m : out.machines) {
    if (out.missing.count(m.machine_id)) continue;
    FaultLabel answer = *m.gold_label;
    if (auto it = overrides.find(m.machine_id); it != overrides.end()) {
      answer = it->second;
      out.wrong.insert(m.machine_id);
    }
    // Capture the exact single-shot request by recording a throwaway answer.
    auto probe = ScriptedBackend::record(std::make_shared<OracleBackend>(fixed_label_provider(answer)));
    run_consultation(m, Strategy::single_shot, probe, ConsultConfig{});
    const auto entries = probe->snapshot().entries();
    out.cassette.insert({entries.at(0).fingerprint, "Assessment for " + m.machine_id + ".\n1. Inspect the machine.\nFAULT: " +
                                                        std::string(to_token(answer)) + " | CONFIDENCE: 0.80"});
  }
  return out;
}

}  // namespace fctest
