#include "faultconsult/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "faultconsult/error.hpp"
#include "faultconsult/parallel.hpp"
#include "json.hpp"

namespace faultconsult {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// 1-based line containing byte offset `byte` (also 1-based, as nlohmann reports).
std::size_t line_of_byte(const std::string& text, std::size_t byte) {
  const std::size_t end = std::min(byte == 0 ? 0 : byte - 1, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(end), '\n'));
}

[[noreturn]] void fail_parse(const fs::path& path, const std::string& what, std::optional<std::size_t> line = {}) {
  std::string msg = path.string();
  if (line) msg += ":" + std::to_string(*line);
  throw Error(ErrorCode::ParseError, msg + ": " + what, line);
}

const json& require(const json& obj, const char* key, const std::string& where, const fs::path& path) {
  auto it = obj.find(key);
  if (it == obj.end()) fail_parse(path, where + ": missing key '" + key + "'");
  return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& where, const fs::path& path) {
  const json& v = require(obj, key, where, path);
  if (!v.is_string()) fail_parse(path, where + "." + key + ": expected string");
  return v.get<std::string>();
}

double require_number(const json& obj, const char* key, const std::string& where, const fs::path& path) {
  const json& v = require(obj, key, where, path);
  if (!v.is_number()) fail_parse(path, where + "." + key + ": expected number");
  return v.get<double>();
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path candidate(p);
  return candidate.is_absolute() ? candidate : (base / candidate).lexically_normal();
}

std::string relative_to(const fs::path& p, const fs::path& base) {
  if (base.empty()) return p.generic_string();
  const fs::path rel = p.lexically_relative(base);
  if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
  return p.generic_string();
}

// Splits on LF, tolerating one trailing CR per line.
std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    std::string_view line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  // A terminating newline does not start another line.
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

}  // namespace

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::IoError, "error reading " + path.string());
  return ss.str();
}

DatasetManifest load_manifest(const fs::path& path) {
  const std::string text = read_file(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t line = line_of_byte(text, e.byte);
    fail_parse(path, "malformed JSON at byte " + std::to_string(e.byte), line);
  }
  if (!doc.is_object()) fail_parse(path, "manifest must be a JSON object");

  const json& version = require(doc, "version", "manifest", path);
  if (!version.is_number_integer()) fail_parse(path, "manifest.version: expected integer");
  if (version.get<long long>() != kManifestVersion) {
    throw Error(ErrorCode::UnknownVersion,
                path.string() + ": unsupported manifest version " + std::to_string(version.get<long long>()));
  }

  DatasetManifest manifest;
  manifest.base_dir = path.parent_path();
  const json& machines = require(doc, "machines", "manifest", path);
  if (!machines.is_array()) fail_parse(path, "manifest.machines: expected array");

  std::set<std::string> seen;
  for (std::size_t i = 0; i < machines.size(); ++i) {
    const json& m = machines[i];
    const std::string where = "machines[" + std::to_string(i) + "]";
    if (!m.is_object()) fail_parse(path, where + ": expected object");

    ManifestEntry entry;
    entry.machine_id = require_string(m, "machine_id", where, path);
    if (entry.machine_id.empty()) fail_parse(path, where + ".machine_id: empty");
    entry.machine_type = require_string(m, "machine_type", where, path);
    entry.rotation_freq_hz = require_number(m, "rotation_freq_hz", where, path);
    if (!(entry.rotation_freq_hz > 0.0)) fail_parse(path, where + ".rotation_freq_hz: must be positive");

    if (auto it = m.find("gold_label"); it != m.end() && !it->is_null()) {
      if (!it->is_string()) fail_parse(path, where + ".gold_label: expected string or null");
      entry.gold_label = it->get<std::string>();
    }

    const json& files = require(m, "sensor_files", where, path);
    if (!files.is_array()) fail_parse(path, where + ".sensor_files: expected array");
    for (std::size_t k = 0; k < files.size(); ++k) {
      const json& f = files[k];
      const std::string fwhere = where + ".sensor_files[" + std::to_string(k) + "]";
      if (!f.is_object()) fail_parse(path, fwhere + ": expected object");
      SensorFileEntry sf;
      sf.path = resolve(manifest.base_dir, require_string(f, "path", fwhere, path));
      const std::string channel = require_string(f, "channel", fwhere, path);
      auto ch = channel_from_token(channel);
      if (!ch) fail_parse(path, fwhere + ".channel: unknown channel '" + channel + "'");
      sf.channel = *ch;
      sf.sample_rate_hz = require_number(f, "sample_rate_hz", fwhere, path);
      if (!(sf.sample_rate_hz > 0.0)) fail_parse(path, fwhere + ".sample_rate_hz: must be positive");
      const std::string start = require_string(f, "start_time", fwhere, path);
      auto ts = parse_rfc3339(start);
      if (!ts) fail_parse(path, fwhere + ".start_time: not an RFC 3339 timestamp");
      sf.start_time = *ts;
      entry.sensor_files.push_back(std::move(sf));
    }

    if (auto it = m.find("maintenance_file"); it != m.end() && !it->is_null()) {
      if (!it->is_string()) fail_parse(path, where + ".maintenance_file: expected string or null");
      entry.maintenance_file = resolve(manifest.base_dir, it->get<std::string>());
    }

    if (!seen.insert(entry.machine_id).second) {
      throw Error(ErrorCode::DuplicateMachineId,
                  path.string() + ": duplicate machine_id '" + entry.machine_id + "'");
    }
    manifest.machines.push_back(std::move(entry));
  }
  return manifest;
}

std::string manifest_to_json(const DatasetManifest& manifest) {
  json machines = json::array();
  for (const ManifestEntry& e : manifest.machines) {
    json files = json::array();
    for (const SensorFileEntry& f : e.sensor_files) {
      files.push_back({{"path", relative_to(f.path, manifest.base_dir)},
                       {"channel", std::string(to_token(f.channel))},
                       {"sample_rate_hz", f.sample_rate_hz},
                       {"start_time", format_rfc3339(f.start_time)}});
    }
    json m = {{"machine_id", e.machine_id},
              {"machine_type", e.machine_type},
              {"rotation_freq_hz", e.rotation_freq_hz},
              {"gold_label", e.gold_label ? json(*e.gold_label) : json(nullptr)},
              {"sensor_files", std::move(files)},
              {"maintenance_file",
               e.maintenance_file ? json(relative_to(*e.maintenance_file, manifest.base_dir)) : json(nullptr)}};
    machines.push_back(std::move(m));
  }
  json doc = {{"version", manifest.version}, {"machines", std::move(machines)}};
  return doc.dump(2) + "\n";
}

SensorSeries parse_sensor_csv(const fs::path& path, Channel channel, double sample_rate_hz, Timestamp start_time) {
  const std::string text = read_file(path);
  const auto lines = split_lines(text);
  if (lines.empty() || lines[0] != "timestamp,value") {
    fail_parse(path, "header must be exactly 'timestamp,value'", 1);
  }

  SensorSeries series;
  series.channel = channel;
  series.unit = std::string(unit_for(channel));
  series.sample_rate_hz = sample_rate_hz;
  series.start_time = start_time;
  series.values.reserve(lines.size() - 1);

  std::optional<Timestamp> previous;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    std::string_view line = lines[i];
    const std::size_t comma = line.find(',');
    if (comma == std::string_view::npos || line.find(',', comma + 1) != std::string_view::npos) {
      fail_parse(path, "expected '<timestamp>,<value>'", line_no);
    }
    auto ts = parse_rfc3339(line.substr(0, comma));
    if (!ts) fail_parse(path, "invalid RFC 3339 timestamp", line_no);

    std::string_view num = line.substr(comma + 1);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), value);
    if (num.empty() || ec == std::errc::invalid_argument || ptr != num.data() + num.size()) {
      fail_parse(path, "invalid decimal value '" + std::string(num) + "'", line_no);
    }
    if (ec == std::errc::result_out_of_range || !std::isfinite(value)) {
      throw Error(ErrorCode::NonFiniteValue,
                  path.string() + ":" + std::to_string(line_no) + ": non-finite value", line_no);
    }
    if (previous && *ts <= *previous) {
      throw Error(ErrorCode::NonMonotonicTimestamps,
                  path.string() + ":" + std::to_string(line_no) + ": timestamps must strictly increase", line_no);
    }
    previous = *ts;
    series.values.push_back(value);
  }
  if (series.values.size() < 2) {
    throw Error(ErrorCode::TooShort, path.string() + ": fewer than 2 samples");
  }
  return series;
}

std::vector<MaintenanceEvent> parse_maintenance_jsonl(const fs::path& path) {
  const std::string text = read_file(path);
  const auto lines = split_lines(text);
  std::vector<MaintenanceEvent> events;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    std::string_view line = lines[i];
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error&) {
      fail_parse(path, "malformed JSON", line_no);
    }
    if (!obj.is_object()) fail_parse(path, "expected JSON object", line_no);
    auto field = [&](const char* key) -> std::string {
      auto it = obj.find(key);
      if (it == obj.end() || !it->is_string()) fail_parse(path, std::string("missing string field '") + key + "'", line_no);
      return it->get<std::string>();
    };
    MaintenanceEvent ev;
    auto ts = parse_rfc3339(field("timestamp"));
    if (!ts) fail_parse(path, "invalid RFC 3339 timestamp", line_no);
    ev.timestamp = *ts;
    ev.category = category_from_token(field("category"));
    ev.text = field("text");
    if (ev.text.empty()) {
      throw Error(ErrorCode::EmptyText, path.string() + ":" + std::to_string(line_no) + ": empty text", line_no);
    }
    events.push_back(std::move(ev));
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const MaintenanceEvent& a, const MaintenanceEvent& b) { return a.timestamp < b.timestamp; });
  return events;
}

std::vector<MachineRecord> load_dataset(const DatasetManifest& manifest, unsigned workers) {
  std::vector<MachineRecord> records(manifest.machines.size());
  parallel_for_index(records.size(), workers, [&](std::size_t i) {
    const ManifestEntry& entry = manifest.machines[i];
    try {
      MachineRecord rec;
      rec.machine_id = entry.machine_id;
      rec.machine_type = entry.machine_type;
      rec.rotation_freq_hz = entry.rotation_freq_hz;
      if (entry.gold_label) {
        const FaultLabel label = parse_fault_label(*entry.gold_label);
        if (label == FaultLabel::unknown) {
          throw Error(ErrorCode::GoldLabelUnknown, "gold label '" + *entry.gold_label + "' is not a known fault class");
        }
        rec.gold_label = label;
      }
      for (const SensorFileEntry& f : entry.sensor_files) {
        rec.series.push_back(parse_sensor_csv(f.path, f.channel, f.sample_rate_hz, f.start_time));
      }
      if (entry.maintenance_file) rec.maintenance = parse_maintenance_jsonl(*entry.maintenance_file);

      const auto violations = validate_machine_record(rec);
      if (!violations.empty()) {
        std::string msg = "record invalid:";
        for (const Violation& v : violations) msg += " " + std::string(code_name(v.code)) + " (" + v.detail + ");";
        throw Error(ErrorCode::InvalidRecord, msg);
      }
      records[i] = std::move(rec);
    } catch (const Error& e) {
      throw e.with_machine(entry.machine_id);
    }
  });
  return records;
}

}  // namespace faultconsult
