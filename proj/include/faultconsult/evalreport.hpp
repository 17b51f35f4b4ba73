#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "faultconsult/consult.hpp"
#include "faultconsult/judge.hpp"

namespace faultconsult {

inline constexpr int kReportVersion = 1;

struct EvalRecord {
  std::string machine_id;
  Strategy strategy = Strategy::multi_round;
  FaultLabel predicted = FaultLabel::unknown;
  FaultLabel gold = FaultLabel::normal;
  bool correct = false;
  double self_confidence = 0.0;
  std::optional<JudgeScores> judge;
  std::optional<std::string> error;        // consultation failure code
  std::optional<std::string> judge_error;  // judging failure code

  bool operator==(const EvalRecord&) const = default;
};

struct AccuracySummary {
  double acc_overall = 0.0;
  // Fault classes only, and only those with at least one record.
  std::map<FaultLabel, double> acc_by_fault;
  // Unweighted mean of acc_by_fault; absent when acc_by_fault is empty.
  std::optional<double> macro_average;
};

// Percentages in [0, 100]. Throws EmptyInput for an empty span.
AccuracySummary compute_accuracy(std::span<const EvalRecord> records);

std::optional<double> macro_average(const std::map<FaultLabel, double>& acc_by_fault);

// Display rounding: half-up to the nearest integer percent.
long round_percent(double percent);

struct StrategyReport {
  std::string name;  // row/column label in rendered tables
  std::optional<Strategy> strategy;
  std::size_t n = 0;
  std::size_t correct = 0;
  std::size_t incorrect = 0;
  std::size_t errors = 0;
  std::size_t judged = 0;
  double acc_overall = 0.0;
  std::map<FaultLabel, double> acc_by_fault;
  std::optional<double> macro_average;
  std::optional<JudgeScores> mean_judge;

  bool operator==(const StrategyReport&) const = default;
};

struct ReportMetadata {
  std::string dataset_digest;
  std::string config_digest;
  std::string timestamp;

  bool operator==(const ReportMetadata&) const = default;
};

struct EvalReport {
  int report_version = kReportVersion;
  std::vector<StrategyReport> strategies;
  ReportMetadata metadata;

  bool operator==(const EvalReport&) const = default;
};

struct EvalConfig {
  unsigned workers = 4;
  ConsultConfig consult;
  JudgeConfig judge;
  // Fixed report timestamp; the current UTC time when unset.
  std::optional<std::string> timestamp;
};

struct EvalResult {
  EvalReport report;
  std::vector<EvalRecord> records;  // sorted by (strategy, machine_id)
};

// Consults every (machine, strategy) pair once on a bounded worker pool and
// judges each completed transcript when a judge backend is given. Per-record
// failures are recorded, never thrown. ConfigError for an empty dataset, no
// strategies, or a machine without a gold label.
EvalResult evaluate_dataset(std::span<const MachineRecord> machines, std::span<const Strategy> strategies,
                            std::shared_ptr<ChatBackend> backend, std::shared_ptr<ChatBackend> judge_backend,
                            const EvalConfig& config = {});

// Aggregates the records of one strategy.
StrategyReport summarize_records(std::string name, std::optional<Strategy> strategy,
                                 std::span<const EvalRecord> records);

std::string dataset_digest(std::span<const MachineRecord> machines);

std::string records_to_jsonl(std::span<const EvalRecord> records);
std::vector<EvalRecord> records_from_jsonl(std::string_view text);

std::string report_to_json(const EvalReport& report);
// Throws ParseError for malformed input, UnknownVersion for other versions.
EvalReport report_from_json(std::string_view text);

enum class Layout { table1, table2, full };
enum class Format { markdown, csv, json };

std::optional<Layout> layout_from_token(std::string_view token);
std::optional<Format> format_from_token(std::string_view token);

// Byte-deterministic rendering. `only`, when non-empty, selects and orders
// strategies by name; a name not in the report raises MissingStrategy, as
// does a report with no strategies.
std::string render_report(const EvalReport& report, Layout layout, Format format,
                          std::span<const std::string> only = {});

}  // namespace faultconsult
