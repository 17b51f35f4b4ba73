#include <charconv>
#include <cmath>
#include <cstdio>

#include "faultconsult/evalreport.hpp"
#include "json.hpp"

namespace faultconsult {

namespace {

using Table = std::vector<std::vector<std::string>>;

std::string percent_cell(std::optional<double> v) {
  if (!v) return "n/a";
  return std::to_string(round_percent(*v)) + "%";
}

std::string score_cell(std::optional<double> v) {
  if (!v) return "n/a";
  char buf[32];
  const double cents = std::floor(*v * 100.0 + 0.5 + 1e-9);
  std::snprintf(buf, sizeof buf, "%.2f", cents / 100.0);
  return buf;
}

std::string raw_number(std::optional<double> v) {
  if (!v) return "";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, *v);
  return std::string(buf, res.ptr);
}

std::optional<double> fault_acc(const StrategyReport& s, FaultLabel l) {
  auto it = s.acc_by_fault.find(l);
  if (it == s.acc_by_fault.end()) return std::nullopt;
  return it->second;
}

std::vector<const StrategyReport*> select(const EvalReport& report, std::span<const std::string> only) {
  std::vector<const StrategyReport*> out;
  if (only.empty()) {
    for (const StrategyReport& s : report.strategies) out.push_back(&s);
  } else {
    for (const std::string& name : only) {
      const StrategyReport* found = nullptr;
      for (const StrategyReport& s : report.strategies) {
        if (s.name == name || (s.strategy && to_token(*s.strategy) == name)) {
          found = &s;
          break;
        }
      }
      if (!found) throw Error(ErrorCode::MissingStrategy, "report has no strategy '" + name + "'");
      out.push_back(found);
    }
  }
  if (out.empty()) throw Error(ErrorCode::MissingStrategy, "report contains no strategies");
  return out;
}

Table table1(const std::vector<const StrategyReport*>& rows) {
  Table t{{"Model", "Accuracy (ACC)", "Context", "Confidence", "Actionability"}};
  for (const StrategyReport* s : rows) {
    std::optional<double> c, f, a;
    if (s->mean_judge) {
      c = s->mean_judge->context;
      f = s->mean_judge->fault_confidence;
      a = s->mean_judge->actionability;
    }
    t.push_back({s->name, percent_cell(s->acc_overall), score_cell(c), score_cell(f), score_cell(a)});
  }
  return t;
}

Table table2(const std::vector<const StrategyReport*>& cols) {
  Table t{{"Fault Type"}};
  for (const StrategyReport* s : cols) t[0].push_back(s->name);
  for (FaultLabel l : kFaultClasses) {
    std::vector<std::string> row{std::string(display_name(l))};
    for (const StrategyReport* s : cols) row.push_back(percent_cell(fault_acc(*s, l)));
    t.push_back(std::move(row));
  }
  std::vector<std::string> avg{"Total Average"};
  for (const StrategyReport* s : cols) avg.push_back(percent_cell(s->macro_average));
  t.push_back(std::move(avg));
  return t;
}

Table counts_table(const std::vector<const StrategyReport*>& rows) {
  Table t{{"Model", "Strategy", "n", "Correct", "Incorrect", "Errors", "Judged", "ACC (exact)", "Macro average (exact)"}};
  for (const StrategyReport* s : rows) {
    t.push_back({s->name, s->strategy ? std::string(to_token(*s->strategy)) : "", std::to_string(s->n),
                 std::to_string(s->correct), std::to_string(s->incorrect), std::to_string(s->errors),
                 std::to_string(s->judged), raw_number(s->acc_overall), raw_number(s->macro_average)});
  }
  return t;
}

std::string markdown(const Table& t, bool first_left = true) {
  std::string out;
  auto row = [&out](const std::vector<std::string>& cells) {
    out += "|";
    for (const std::string& c : cells) out += " " + c + " |";
    out += "\n";
  };
  row(t[0]);
  out += "|";
  for (std::size_t i = 0; i < t[0].size(); ++i) out += (i == 0 && first_left) ? "---|" : ":---:|";
  out += "\n";
  for (std::size_t r = 1; r < t.size(); ++r) row(t[r]);
  return out;
}

std::string csv_cell(const std::string& c) {
  if (c.find_first_of(",\"\n") == std::string::npos) return c;
  std::string out = "\"";
  for (char ch : c) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string csv(const Table& t) {
  std::string out;
  for (const auto& row : t) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += csv_cell(row[i]);
    }
    out += '\n';
  }
  return out;
}

std::string table_json(std::string_view layout, const Table& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 1; r < t.size(); ++r) rows.push_back(t[r]);
  nlohmann::json doc = {{"layout", std::string(layout)}, {"columns", t[0]}, {"rows", std::move(rows)}};
  return doc.dump(2) + "\n";
}

Table full_csv_table(const std::vector<const StrategyReport*>& rows) {
  Table t{{"model", "strategy", "n", "correct", "incorrect", "errors", "judged", "acc_overall", "acc_misalignment",
           "acc_bearing_wear", "acc_overheating", "macro_average", "context", "confidence", "actionability"}};
  for (const StrategyReport* s : rows) {
    std::optional<double> c, f, a;
    if (s->mean_judge) {
      c = s->mean_judge->context;
      f = s->mean_judge->fault_confidence;
      a = s->mean_judge->actionability;
    }
    t.push_back({s->name, s->strategy ? std::string(to_token(*s->strategy)) : "", std::to_string(s->n),
                 std::to_string(s->correct), std::to_string(s->incorrect), std::to_string(s->errors),
                 std::to_string(s->judged), raw_number(s->acc_overall),
                 raw_number(fault_acc(*s, FaultLabel::misalignment)), raw_number(fault_acc(*s, FaultLabel::bearing_wear)),
                 raw_number(fault_acc(*s, FaultLabel::overheating)), raw_number(s->macro_average), raw_number(c),
                 raw_number(f), raw_number(a)});
  }
  return t;
}

}  // namespace

std::optional<Layout> layout_from_token(std::string_view token) {
  if (token == "table1") return Layout::table1;
  if (token == "table2") return Layout::table2;
  if (token == "full") return Layout::full;
  return std::nullopt;
}

std::optional<Format> format_from_token(std::string_view token) {
  if (token == "markdown") return Format::markdown;
  if (token == "csv") return Format::csv;
  if (token == "json") return Format::json;
  return std::nullopt;
}

std::string render_report(const EvalReport& report, Layout layout, Format format, std::span<const std::string> only) {
  const auto chosen = select(report, only);
  switch (layout) {
    case Layout::table1:
    case Layout::table2: {
      const Table t = layout == Layout::table1 ? table1(chosen) : table2(chosen);
      const std::string_view name = layout == Layout::table1 ? "table1" : "table2";
      if (format == Format::markdown) return markdown(t);
      if (format == Format::csv) return csv(t);
      return table_json(name, t);
    }
    case Layout::full: {
      if (format == Format::csv) return csv(full_csv_table(chosen));
      if (format == Format::json) {
        EvalReport subset = report;
        subset.strategies.clear();
        for (const StrategyReport* s : chosen) subset.strategies.push_back(*s);
        return report_to_json(subset);
      }
      std::string out = "# Evaluation report\n\n";
      out += "- report version: " + std::to_string(report.report_version) + "\n";
      out += "- dataset digest: " + report.metadata.dataset_digest + "\n";
      out += "- config digest: " + report.metadata.config_digest + "\n";
      out += "- timestamp: " + report.metadata.timestamp + "\n\n";
      out += "## Overall accuracy and judge scores\n\n" + markdown(table1(chosen)) + "\n";
      out += "## Accuracy by fault type\n\n" + markdown(table2(chosen)) + "\n";
      out += "## Counts\n\n" + markdown(counts_table(chosen));
      return out;
    }
  }
  return {};
}

}  // namespace faultconsult
