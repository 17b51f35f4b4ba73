// faultconsult command-line front end.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 backend error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "faultconsult/evalreport.hpp"
#include "faultconsult/ingest.hpp"
#include "faultconsult/judge.hpp"
#include "faultconsult/service.hpp"
#include "faultconsult/summarize.hpp"
#include "faultconsult/synthgen.hpp"

namespace fc = faultconsult;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitBackend = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int exit_code_for(fc::ErrorCode code) {
  using fc::ErrorCode;
  if (fc::is_backend_error(code)) return kExitBackend;
  switch (code) {
    case ErrorCode::SessionFailed:
    case ErrorCode::BackendUnavailable:
    case ErrorCode::JudgeUnparseable:
      return kExitBackend;
    case ErrorCode::InvalidRequest:
    case ErrorCode::ConfigError:
    case ErrorCode::ConfigInvalid:
    case ErrorCode::MissingStrategy:
    case ErrorCode::ScoreOutOfRange:
      return kExitUsage;
    default:
      return kExitData;
  }
}

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

fc::Strategy parse_strategy(const std::string& token) {
  auto s = fc::strategy_from_token(token);
  if (!s) throw UsageError("unknown strategy '" + token + "' (multi_round, single_shot, cot)");
  return *s;
}

std::vector<fc::MachineRecord> load_machines(const std::string& manifest_path, unsigned workers) {
  return fc::load_dataset(fc::load_manifest(manifest_path), workers);
}

// Consultation backend by kind. oracle and http record into `cassette` when
// one is given; scripted replays it.
std::shared_ptr<fc::ChatBackend> make_backend(const std::string& kind, const std::vector<fc::MachineRecord>& machines,
                                              const std::string& cassette) {
  std::shared_ptr<fc::ChatBackend> inner;
  if (kind == "scripted") {
    if (cassette.empty()) throw UsageError("--backend scripted requires --cassette");
    return fc::ScriptedBackend::replay(fc::Cassette::load(cassette));
  }
  if (kind == "oracle") {
    inner = std::make_shared<fc::OracleBackend>(fc::dataset_label_provider(machines));
  } else if (kind == "http") {
    inner = std::make_shared<fc::HttpBackend>(fc::HttpBackendConfig::from_env());
  } else {
    throw UsageError("unknown backend '" + kind + "' (oracle, scripted, http)");
  }
  if (cassette.empty()) return inner;
  return fc::ScriptedBackend::record(inner, std::filesystem::path(cassette));
}

fc::JudgeScores parse_scores(const std::string& text) {
  auto parts = split_csv(text);
  if (parts.size() != 3) throw UsageError("--judge-scores expects context,confidence,actionability");
  double v[3];
  for (int i = 0; i < 3; ++i) {
    try {
      std::size_t used = 0;
      v[i] = std::stod(parts[static_cast<std::size_t>(i)], &used);
      if (used != parts[static_cast<std::size_t>(i)].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw UsageError("--judge-scores: '" + parts[static_cast<std::size_t>(i)] + "' is not a number");
    }
  }
  return {v[0], v[1], v[2]};
}

std::shared_ptr<fc::ChatBackend> make_judge(const std::string& kind, const std::string& scores,
                                            const std::string& cassette) {
  if (kind == "scripted") {
    if (!cassette.empty()) return fc::ScriptedBackend::replay(fc::Cassette::load(cassette));
    if (scores.empty()) throw UsageError("--judge scripted requires --judge-scores or --judge-cassette");
    return fc::scripted_judge(parse_scores(scores));
  }
  if (kind == "http") {
    auto inner = std::make_shared<fc::HttpBackend>(fc::HttpBackendConfig::from_env());
    if (cassette.empty()) return inner;
    return fc::ScriptedBackend::record(inner, std::filesystem::path(cassette));
  }
  if (kind == "none") return nullptr;
  throw UsageError("unknown judge '" + kind + "' (scripted, http, none)");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw fc::Error(fc::ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw fc::Error(fc::ErrorCode::IoError, "write failed for " + path.string());
}

void print_consultation(const fc::ConsultationOutcome& outcome) {
  for (const fc::PhaseRecord& p : outcome.transcript.phases) {
    std::cout << "### " << fc::to_token(p.phase);
    if (p.retries_used > 0) std::cout << " (retries: " << p.retries_used << ')';
    std::cout << '\n';
    if (p.operator_note) std::cout << "operator note: " << *p.operator_note << '\n';
    std::cout << p.response << "\n\n";
  }
  const fc::DiagnosisResult& d = outcome.diagnosis;
  std::cout << "diagnosis: " << fc::to_token(d.label) << '\n';
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", d.confidence);
  std::cout << "confidence: " << buf << '\n';
  for (std::size_t i = 0; i < d.actions.size(); ++i) std::cout << i + 1 << ". " << d.actions[i] << '\n';
  for (fc::DiagnosisWarning w : d.parse_warnings) std::cout << "warning: " << fc::code_name(w) << '\n';
  if (outcome.error) std::cout << "error: " << fc::code_name(*outcome.error) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-round LLM consultation for machine fault diagnosis"};
  app.require_subcommand(1);

  // synthgen
  auto* synth = app.add_subcommand("synthgen", "Generate a labeled synthetic dataset");
  std::string synth_out;
  fc::SynthConfig synth_config;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--n-per-class", synth_config.n_per_class, "Machines per class")->default_val(1);
  synth->add_option("--seed", synth_config.seed, "Master seed")->default_val(0);
  synth->add_option("--duration", synth_config.duration_s, "Vibration snapshot length in seconds")
      ->default_val(synth_config.duration_s);
  synth->add_option("--temp-duration", synth_config.temp_duration_s, "Temperature log length in seconds")
      ->default_val(synth_config.temp_duration_s);

  // consult
  auto* consult = app.add_subcommand("consult", "Run one consultation");
  std::string manifest, machine_id, strategy_token = "multi_round", backend_kind = "oracle", cassette;
  std::vector<std::string> notes;
  bool consult_json = false, show_summary = false;
  consult->add_option("--manifest", manifest, "Dataset manifest")->required();
  consult->add_option("--machine", machine_id, "Machine id")->required();
  consult->add_option("--strategy", strategy_token, "multi_round, single_shot or cot");
  consult->add_option("--backend", backend_kind, "oracle, scripted or http");
  consult->add_option("--cassette", cassette, "Replay (scripted) or record (oracle/http) cassette");
  consult->add_option("--note", notes, "Operator note; first before analysis, second before action");
  consult->add_flag("--json", consult_json, "Print the transcript and diagnosis as JSON");
  consult->add_flag("--show-summary", show_summary, "Print the sensor summary first");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate strategies over a dataset");
  std::string strategies_csv = "multi_round,single_shot,cot", judge_kind = "scripted", judge_scores, judge_cassette,
              out_path, records_path, timestamp;
  unsigned workers = 4;
  evaluate->add_option("--manifest", manifest, "Dataset manifest")->required();
  evaluate->add_option("--strategies", strategies_csv, "Comma-separated strategies");
  evaluate->add_option("--backend", backend_kind, "oracle, scripted or http");
  evaluate->add_option("--cassette", cassette, "Replay (scripted) or record (oracle/http) cassette");
  evaluate->add_option("--judge", judge_kind, "scripted, http or none");
  evaluate->add_option("--judge-scores", judge_scores, "Fixed scripted judge scores: context,confidence,actionability");
  evaluate->add_option("--judge-cassette", judge_cassette, "Judge cassette (replayed for scripted, recorded for http)");
  evaluate->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  evaluate->add_option("--out", out_path, "Report JSON path")->required();
  evaluate->add_option("--records", records_path, "Per-record JSONL path (default: <out>.records.jsonl)");
  evaluate->add_option("--timestamp", timestamp, "Fixed report timestamp (RFC3339)");

  // report
  auto* report = app.add_subcommand("report", "Render a report");
  std::string report_in, layout_token = "full", format_token = "markdown", only_csv;
  report->add_option("--in", report_in, "Report JSON")->required();
  report->add_option("--layout", layout_token, "table1, table2 or full");
  report->add_option("--format", format_token, "markdown, csv or json");
  report->add_option("--strategies", only_csv, "Comma-separated strategy names to include, in order");

  // serve
  auto* serve = app.add_subcommand("serve", "Serve the JSON API");
  std::string addr = "127.0.0.1:8080";
  serve->add_option("--addr", addr, "host:port to bind");
  serve->add_option("--manifest", manifest, "Dataset manifest")->required();
  serve->add_option("--cassette", cassette, "Cassette replayed by the 'scripted' backend");
  serve->add_option("--judge-scores", judge_scores, "Fixed scores for the 'scripted' judge");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*synth) {
      fc::validate_config(synth_config);
      const auto records = fc::generate_dataset(synth_config);
      const auto written = fc::write_dataset(records, synth_out);
      std::cout << "wrote " << written.machines.size() << " machines to " << synth_out << '\n';
      return kExitOk;
    }

    if (*consult) {
      const fc::Strategy strategy = parse_strategy(strategy_token);
      const auto machines = load_machines(manifest, 1);
      const fc::MachineRecord* machine = nullptr;
      for (const auto& m : machines) {
        if (m.machine_id == machine_id) machine = &m;
      }
      if (!machine) throw fc::Error(fc::ErrorCode::UnknownMachine, "unknown machine '" + machine_id + "'");
      if (notes.size() > 2) throw UsageError("at most two --note values (before analysis, before action)");
      fc::ConsultConfig config;
      config.model = fc::model_from_env();
      if (!notes.empty()) config.note_before_analysis = notes[0];
      if (notes.size() > 1) config.note_before_action = notes[1];
      auto backend = make_backend(backend_kind, machines, cassette);
      if (show_summary) std::cout << fc::render_summary_text(*machine, fc::summarize_machine(*machine)) << '\n';
      const auto outcome = fc::run_consultation(*machine, strategy, backend, config);
      if (consult_json) {
        nlohmann::json out = {{"transcript", fc::transcript_to_json(outcome.transcript)},
                              {"diagnosis", fc::diagnosis_to_json(outcome.diagnosis)},
                              {"error", outcome.error ? nlohmann::json(fc::code_name(*outcome.error))
                                                      : nlohmann::json(nullptr)}};
        std::cout << out.dump(2) << '\n';
      } else {
        print_consultation(outcome);
      }
      return outcome.error ? exit_code_for(*outcome.error) : kExitOk;
    }

    if (*evaluate) {
      std::vector<fc::Strategy> strategies;
      for (const auto& t : split_csv(strategies_csv)) strategies.push_back(parse_strategy(t));
      if (strategies.empty()) throw UsageError("--strategies is empty");
      const auto machines = load_machines(manifest, workers);
      auto backend = make_backend(backend_kind, machines, cassette);
      auto judge = make_judge(judge_kind, judge_scores, judge_cassette);
      fc::EvalConfig config;
      config.workers = workers;
      config.consult.model = fc::model_from_env();
      config.judge.model = fc::model_from_env();
      if (!timestamp.empty()) config.timestamp = timestamp;
      const auto result = fc::evaluate_dataset(machines, strategies, backend, judge, config);
      write_text(out_path, fc::report_to_json(result.report));
      if (records_path.empty()) records_path = out_path + ".records.jsonl";
      write_text(records_path, fc::records_to_jsonl(result.records));
      std::cout << fc::render_report(result.report, fc::Layout::table1, fc::Format::markdown);
      return kExitOk;
    }

    if (*report) {
      auto layout = fc::layout_from_token(layout_token);
      auto format = fc::format_from_token(format_token);
      if (!layout) throw UsageError("unknown layout '" + layout_token + "' (table1, table2, full)");
      if (!format) throw UsageError("unknown format '" + format_token + "' (markdown, csv, json)");
      const auto parsed = fc::report_from_json(fc::read_file(report_in));
      const auto only = split_csv(only_csv);
      std::cout << fc::render_report(parsed, *layout, *format, only);
      return kExitOk;
    }

    if (*serve) {
      const auto colon = addr.rfind(':');
      int port = -1;
      if (colon != std::string::npos) {
        try {
          port = std::stoi(addr.substr(colon + 1));
        } catch (const std::exception&) {
          port = -1;
        }
      }
      if (port < 0 || port > 65535) throw UsageError("--addr must be host:port");
      const std::string host = addr.substr(0, colon);

      fc::ServiceOptions options;
      options.machines = load_machines(manifest, 4);
      options.backends["oracle"] = make_backend("oracle", options.machines, "");
      if (!cassette.empty()) options.backends["scripted"] = make_backend("scripted", options.machines, cassette);
      const auto http_config = fc::HttpBackendConfig::from_env();
      if (!http_config.api_key.empty()) {
        options.backends["http"] = std::make_shared<fc::HttpBackend>(http_config);
        options.judges["http"] = options.backends["http"];
      }
      if (!judge_scores.empty()) options.judges["scripted"] = fc::scripted_judge(parse_scores(judge_scores));
      options.consult.model = fc::model_from_env();
      options.judge.model = options.consult.model;

      fc::GatewayService service(std::move(options));
      const int bound = service.bind(host, port);
      if (bound < 0) throw fc::Error(fc::ErrorCode::IoError, "cannot bind " + addr);
      std::cerr << "listening on http://" << host << ':' << bound << " (no authentication)\n";
      return service.listen_after_bind() ? kExitOk : kExitData;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const fc::Error& e) {
    std::cerr << "error [" << fc::code_name(e.code()) << "]: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
