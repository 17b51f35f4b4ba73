#include "faultconsult/evalreport.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>

#include "faultconsult/digest.hpp"
#include "faultconsult/parallel.hpp"
#include "json.hpp"

namespace faultconsult {

using nlohmann::json;

namespace {

bool is_fault_class(FaultLabel l) {
  return std::find(kFaultClasses.begin(), kFaultClasses.end(), l) != kFaultClasses.end();
}

void put_field(std::string& out, std::string_view s) {
  out += std::to_string(s.size());
  out += ':';
  out.append(s);
}

void put_double(std::string& out, double v) { put_field(out, std::to_string(std::bit_cast<std::uint64_t>(v))); }

std::string now_rfc3339() {
  using namespace std::chrono;
  return format_rfc3339(floor<seconds>(system_clock::now()));
}

std::string config_digest(std::span<const Strategy> strategies, const EvalConfig& config, bool judged) {
  std::string buf;
  for (Strategy s : strategies) put_field(buf, to_token(s));
  put_field(buf, config.consult.model);
  put_double(buf, config.consult.temperature);
  put_field(buf, std::to_string(config.consult.max_retries_per_phase));
  put_field(buf, judged ? config.judge.model : std::string("-"));
  put_double(buf, config.judge.temperature);
  put_field(buf, std::to_string(config.judge.max_retries));
  return sha256_hex(buf);
}

[[noreturn]] void bad_json(const std::string& what) { throw Error(ErrorCode::ParseError, "report: " + what); }

json judge_to_json(const JudgeScores& s) {
  return {{"context", s.context}, {"confidence", s.fault_confidence}, {"actionability", s.actionability}};
}

JudgeScores judge_from_json(const json& j) {
  return {j.at("context").get<double>(), j.at("confidence").get<double>(), j.at("actionability").get<double>()};
}

FaultLabel label_or_throw(const std::string& token) {
  auto l = label_from_token(token);
  if (!l) throw Error(ErrorCode::ParseError, "unknown label token '" + token + "'");
  return *l;
}

}  // namespace

long round_percent(double percent) { return static_cast<long>(std::floor(percent + 0.5 + 1e-9)); }

std::optional<double> macro_average(const std::map<FaultLabel, double>& acc_by_fault) {
  if (acc_by_fault.empty()) return std::nullopt;
  double sum = 0.0;
  for (const auto& [label, acc] : acc_by_fault) sum += acc;
  return sum / static_cast<double>(acc_by_fault.size());
}

AccuracySummary compute_accuracy(std::span<const EvalRecord> records) {
  if (records.empty()) throw Error(ErrorCode::EmptyInput, "no records to score");
  AccuracySummary out;
  std::size_t correct = 0;
  std::map<FaultLabel, std::pair<std::size_t, std::size_t>> per_fault;  // (correct, total)
  for (const EvalRecord& r : records) {
    correct += r.correct ? 1 : 0;
    if (is_fault_class(r.gold)) {
      auto& [c, t] = per_fault[r.gold];
      c += r.correct ? 1 : 0;
      ++t;
    }
  }
  out.acc_overall = 100.0 * static_cast<double>(correct) / static_cast<double>(records.size());
  for (const auto& [label, ct] : per_fault) {
    out.acc_by_fault[label] = 100.0 * static_cast<double>(ct.first) / static_cast<double>(ct.second);
  }
  out.macro_average = macro_average(out.acc_by_fault);
  return out;
}

StrategyReport summarize_records(std::string name, std::optional<Strategy> strategy,
                                 std::span<const EvalRecord> records) {
  StrategyReport r;
  r.name = std::move(name);
  r.strategy = strategy;
  r.n = records.size();
  JudgeScores sum;
  for (const EvalRecord& rec : records) {
    if (rec.correct) {
      ++r.correct;
    } else if (rec.error) {
      ++r.errors;
    } else {
      ++r.incorrect;
    }
    if (rec.judge) {
      ++r.judged;
      sum.context += rec.judge->context;
      sum.fault_confidence += rec.judge->fault_confidence;
      sum.actionability += rec.judge->actionability;
    }
  }
  if (!records.empty()) {
    const AccuracySummary acc = compute_accuracy(records);
    r.acc_overall = acc.acc_overall;
    r.acc_by_fault = acc.acc_by_fault;
    r.macro_average = acc.macro_average;
  }
  if (r.judged > 0) {
    const double k = static_cast<double>(r.judged);
    r.mean_judge = JudgeScores{sum.context / k, sum.fault_confidence / k, sum.actionability / k};
  }
  return r;
}

std::string dataset_digest(std::span<const MachineRecord> machines) {
  std::vector<const MachineRecord*> sorted;
  for (const MachineRecord& m : machines) sorted.push_back(&m);
  std::sort(sorted.begin(), sorted.end(),
            [](const MachineRecord* a, const MachineRecord* b) { return a->machine_id < b->machine_id; });
  std::string buf;
  for (const MachineRecord* m : sorted) {
    put_field(buf, m->machine_id);
    put_field(buf, m->machine_type);
    put_double(buf, m->rotation_freq_hz);
    put_field(buf, m->gold_label ? to_token(*m->gold_label) : "-");
    for (const SensorSeries& s : m->series) {
      put_field(buf, to_token(s.channel));
      put_double(buf, s.sample_rate_hz);
      put_field(buf, format_rfc3339(s.start_time));
      for (double v : s.values) put_double(buf, v);
    }
    for (const MaintenanceEvent& ev : m->maintenance) {
      put_field(buf, format_rfc3339(ev.timestamp));
      put_field(buf, to_token(ev.category));
      put_field(buf, ev.text);
    }
  }
  return sha256_hex(buf);
}

EvalResult evaluate_dataset(std::span<const MachineRecord> machines, std::span<const Strategy> strategies,
                            std::shared_ptr<ChatBackend> backend, std::shared_ptr<ChatBackend> judge_backend,
                            const EvalConfig& config) {
  if (machines.empty()) throw Error(ErrorCode::ConfigError, "dataset is empty");
  if (strategies.empty()) throw Error(ErrorCode::ConfigError, "no strategies requested");
  if (!backend) throw Error(ErrorCode::ConfigError, "no consultation backend");
  for (const MachineRecord& m : machines) {
    if (!m.gold_label) throw Error(ErrorCode::ConfigError, "machine " + m.machine_id + " has no gold label");
  }

  std::vector<EvalRecord> records(machines.size() * strategies.size());
  parallel_for_index(records.size(), config.workers, [&](std::size_t i) {
    const Strategy strategy = strategies[i / machines.size()];
    const MachineRecord& machine = machines[i % machines.size()];
    EvalRecord& rec = records[i];
    rec.machine_id = machine.machine_id;
    rec.strategy = strategy;
    rec.gold = *machine.gold_label;

    std::optional<ConsultationTranscript> transcript;
    try {
      ConsultationOutcome out = run_consultation(machine, strategy, backend, config.consult);
      rec.predicted = out.diagnosis.label;
      rec.self_confidence = out.diagnosis.confidence;
      if (out.error) rec.error = std::string(code_name(*out.error));
      transcript = std::move(out.transcript);
    } catch (const Error& e) {
      rec.predicted = FaultLabel::unknown;
      rec.error = std::string(code_name(e.code()));
    } catch (const std::exception&) {
      rec.predicted = FaultLabel::unknown;
      rec.error = "InternalError";
    }
    rec.correct = !rec.error && rec.predicted == rec.gold;

    if (transcript && judge_backend) {
      try {
        rec.judge = judge_transcript(*transcript, rec.gold, *judge_backend, config.judge).scores;
      } catch (const Error& e) {
        rec.judge_error = std::string(code_name(e.code()));
      } catch (const std::exception&) {
        rec.judge_error = "InternalError";
      }
    }
  });

  std::sort(records.begin(), records.end(), [](const EvalRecord& a, const EvalRecord& b) {
    const auto ta = to_token(a.strategy), tb = to_token(b.strategy);
    return ta != tb ? ta < tb : a.machine_id < b.machine_id;
  });

  EvalResult result;
  for (Strategy s : strategies) {
    std::vector<EvalRecord> subset;
    for (const EvalRecord& r : records) {
      if (r.strategy == s) subset.push_back(r);
    }
    result.report.strategies.push_back(summarize_records(std::string(display_name(s)), s, subset));
  }
  result.report.metadata.dataset_digest = dataset_digest(machines);
  result.report.metadata.config_digest = config_digest(strategies, config, judge_backend != nullptr);
  result.report.metadata.timestamp = config.timestamp ? *config.timestamp : now_rfc3339();
  result.records = std::move(records);
  return result;
}

std::string records_to_jsonl(std::span<const EvalRecord> records) {
  std::string out;
  for (const EvalRecord& r : records) {
    json j = {{"machine_id", r.machine_id},
              {"strategy", std::string(to_token(r.strategy))},
              {"predicted", std::string(to_token(r.predicted))},
              {"gold", std::string(to_token(r.gold))},
              {"correct", r.correct},
              {"self_confidence", r.self_confidence},
              {"judge", r.judge ? judge_to_json(*r.judge) : json(nullptr)},
              {"error", r.error ? json(*r.error) : json(nullptr)},
              {"judge_error", r.judge_error ? json(*r.judge_error) : json(nullptr)}};
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<EvalRecord> records_from_jsonl(std::string_view text) {
  std::vector<EvalRecord> out;
  std::size_t start = 0, line_no = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string_view line = text.substr(start, nl - start);
    start = nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      const json j = json::parse(line);
      EvalRecord r;
      r.machine_id = j.at("machine_id").get<std::string>();
      auto s = strategy_from_token(j.at("strategy").get<std::string>());
      if (!s) throw Error(ErrorCode::ParseError, "unknown strategy");
      r.strategy = *s;
      r.predicted = label_or_throw(j.at("predicted").get<std::string>());
      r.gold = label_or_throw(j.at("gold").get<std::string>());
      r.correct = j.at("correct").get<bool>();
      r.self_confidence = j.at("self_confidence").get<double>();
      if (j.contains("judge") && !j["judge"].is_null()) r.judge = judge_from_json(j["judge"]);
      if (j.contains("error") && !j["error"].is_null()) r.error = j["error"].get<std::string>();
      if (j.contains("judge_error") && !j["judge_error"].is_null()) r.judge_error = j["judge_error"].get<std::string>();
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ParseError, "records line " + std::to_string(line_no) + ": " + e.what(), line_no);
    } catch (const Error& e) {
      throw Error(ErrorCode::ParseError, "records line " + std::to_string(line_no) + ": " + e.what(), line_no);
    }
  }
  return out;
}

std::string report_to_json(const EvalReport& report) {
  json strategies = json::array();
  for (const StrategyReport& s : report.strategies) {
    json by_fault = json::object();
    for (const auto& [label, acc] : s.acc_by_fault) by_fault[std::string(to_token(label))] = acc;
    strategies.push_back({{"name", s.name},
                          {"strategy", s.strategy ? json(std::string(to_token(*s.strategy))) : json(nullptr)},
                          {"n", s.n},
                          {"correct", s.correct},
                          {"incorrect", s.incorrect},
                          {"errors", s.errors},
                          {"judged", s.judged},
                          {"acc_overall", s.acc_overall},
                          {"acc_by_fault", std::move(by_fault)},
                          {"macro_average", s.macro_average ? json(*s.macro_average) : json(nullptr)},
                          {"mean_judge", s.mean_judge ? judge_to_json(*s.mean_judge) : json(nullptr)}});
  }
  json doc = {{"report_version", report.report_version},
              {"metadata",
               {{"dataset_digest", report.metadata.dataset_digest},
                {"config_digest", report.metadata.config_digest},
                {"timestamp", report.metadata.timestamp}}},
              {"strategies", std::move(strategies)}};
  return doc.dump(2) + "\n";
}

EvalReport report_from_json(std::string_view text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) bad_json("not a JSON object");
  try {
    EvalReport r;
    r.report_version = doc.at("report_version").get<int>();
    if (r.report_version != kReportVersion) {
      throw Error(ErrorCode::UnknownVersion, "unsupported report_version " + std::to_string(r.report_version));
    }
    const json& meta = doc.at("metadata");
    r.metadata = {meta.at("dataset_digest").get<std::string>(), meta.at("config_digest").get<std::string>(),
                  meta.at("timestamp").get<std::string>()};
    for (const json& s : doc.at("strategies")) {
      StrategyReport sr;
      sr.name = s.at("name").get<std::string>();
      if (!s.at("strategy").is_null()) {
        sr.strategy = strategy_from_token(s["strategy"].get<std::string>());
        if (!sr.strategy) bad_json("unknown strategy token");
      }
      sr.n = s.at("n").get<std::size_t>();
      sr.correct = s.at("correct").get<std::size_t>();
      sr.incorrect = s.at("incorrect").get<std::size_t>();
      sr.errors = s.at("errors").get<std::size_t>();
      sr.judged = s.at("judged").get<std::size_t>();
      sr.acc_overall = s.at("acc_overall").get<double>();
      for (const auto& [key, value] : s.at("acc_by_fault").items()) {
        sr.acc_by_fault[label_or_throw(key)] = value.get<double>();
      }
      if (!s.at("macro_average").is_null()) sr.macro_average = s["macro_average"].get<double>();
      if (!s.at("mean_judge").is_null()) sr.mean_judge = judge_from_json(s["mean_judge"]);
      r.strategies.push_back(std::move(sr));
    }
    return r;
  } catch (const json::exception& e) {
    bad_json(e.what());
  }
}

}  // namespace faultconsult
