#include "faultconsult/llm.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <unordered_map>

#include "faultconsult/digest.hpp"
#include "faultconsult/error.hpp"
#include "faultconsult/ingest.hpp"
#include "faultconsult/synthgen.hpp"
#include "json.hpp"

namespace faultconsult {

namespace {

constexpr std::string_view kSummaryBegin = "=== SENSOR SUMMARY ===";
constexpr std::string_view kSummaryEnd = "=== END SENSOR SUMMARY ===";

void put_u64(std::string& out, std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<char>((v >> shift) & 0xFF));
}

void put_field(std::string& out, std::string_view field) {
  put_u64(out, field.size());
  out.append(field);
}

// Body of the sensor summary block found anywhere in the conversation.
std::optional<std::string_view> find_summary_block(const ChatRequest& request) {
  for (const ChatMessage& m : request.messages) {
    std::string_view c = m.content;
    const std::size_t b = c.find(kSummaryBegin);
    if (b == std::string_view::npos) continue;
    const std::size_t body = b + kSummaryBegin.size() + 1;
    const std::size_t e = c.find(kSummaryEnd, b);
    if (e == std::string_view::npos || body > e) continue;
    return c.substr(body, e - body);
  }
  return std::nullopt;
}

std::string rationale_for(FaultLabel label) {
  switch (label) {
    case FaultLabel::overheating:
      return "The temperature log rises steadily across the observation window and the most recent readings sit well "
             "above the starting level, while the vibration statistics show no strong impulsive or harmonic content. "
             "A sustained thermal trend of this kind points to a cooling or lubrication problem.";
    case FaultLabel::bearing_wear:
      return "The vibration signal is strongly impulsive: its excess kurtosis is far above what a running-speed tone "
             "plus noise would produce, and several samples exceed three standard deviations. Repetitive impacts of "
             "this kind are characteristic of rolling-element damage.";
    case FaultLabel::misalignment:
      return "The component at twice the rotation frequency dominates the running-speed component, while the signal "
             "is otherwise smooth and the temperature is flat. A strong 2x component is the classic signature of "
             "shaft misalignment.";
    case FaultLabel::normal:
      return "Temperature is flat, vibration is dominated by the running-speed component at a low level, and the "
             "signal shows no impulsive content. The machine appears to be operating normally.";
    case FaultLabel::unknown:
      return "The available evidence does not support a confident diagnosis.";
  }
  return {};
}

std::string fault_line(FaultLabel label) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", kOracleConfidence);
  return "FAULT: " + std::string(to_token(label)) + " | CONFIDENCE: " + buf;
}

std::string action_list(FaultLabel label) {
  std::string out = "Recommended maintenance actions:\n";
  const auto actions = canned_actions(label);
  for (std::size_t i = 0; i < actions.size(); ++i) out += std::to_string(i + 1) + ". " + actions[i] + "\n";
  return out;
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

std::string_view to_token(Role role) {
  switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "user";
}

std::optional<Role> role_from_token(std::string_view token) {
  if (token == "system") return Role::system;
  if (token == "user") return Role::user;
  if (token == "assistant") return Role::assistant;
  return std::nullopt;
}

void validate_request(const ChatRequest& request) {
  if (request.messages.empty()) throw Error(ErrorCode::InvalidRequest, "request has no messages");
  if (request.messages.front().role == Role::assistant) {
    throw Error(ErrorCode::InvalidRequest, "first message must be system or user");
  }
  if (!(request.temperature >= 0.0 && request.temperature <= 2.0)) {
    throw Error(ErrorCode::InvalidRequest, "temperature must lie in [0, 2]");
  }
  for (std::size_t i = 0; i < request.messages.size(); ++i) {
    if (request.messages[i].content.empty()) {
      throw Error(ErrorCode::InvalidRequest, "message " + std::to_string(i) + " has empty content");
    }
    if (i > 0 && request.messages[i].role == Role::assistant && request.messages[i - 1].role == Role::assistant) {
      throw Error(ErrorCode::InvalidRequest, "consecutive assistant messages at " + std::to_string(i));
    }
  }
}

std::string fingerprint(const ChatRequest& request) {
  std::string buf;
  put_field(buf, "faultconsult.fingerprint.v1");
  put_field(buf, request.model);
  put_u64(buf, std::bit_cast<std::uint64_t>(request.temperature));
  put_u64(buf, request.messages.size());
  for (const ChatMessage& m : request.messages) {
    put_field(buf, to_token(m.role));
    put_field(buf, m.content);
  }
  return sha256_hex(buf);
}

std::string_view to_token(PhaseMarker marker) {
  switch (marker) {
    case PhaseMarker::summary: return "summary";
    case PhaseMarker::analysis: return "analysis";
    case PhaseMarker::action: return "action";
    case PhaseMarker::single: return "single";
    case PhaseMarker::single_cot: return "single_cot";
  }
  return "single";
}

std::string marker_line(PhaseMarker marker) { return "<!--phase:" + std::string(to_token(marker)) + "-->"; }

std::optional<PhaseMarker> find_marker(std::string_view text) {
  constexpr std::string_view open = "<!--phase:";
  for (std::size_t pos = text.find(open); pos != std::string_view::npos; pos = text.find(open, pos + 1)) {
    const std::size_t start = pos + open.size();
    const std::size_t close = text.find("-->", start);
    if (close == std::string_view::npos) return std::nullopt;
    const std::string_view token = text.substr(start, close - start);
    for (PhaseMarker m : {PhaseMarker::summary, PhaseMarker::analysis, PhaseMarker::action, PhaseMarker::single,
                          PhaseMarker::single_cot}) {
      if (to_token(m) == token) return m;
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

Cassette::Cassette(std::vector<CassetteEntry> entries) {
  for (CassetteEntry& e : entries) insert(std::move(e));
}

Cassette Cassette::load(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  Cassette c;
  std::size_t line_no = 0, start = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string::npos) nl = text.size();
    std::string_view line(text.data() + start, nl - start);
    ++line_no;
    start = nl + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(line_no) + ": malformed JSON", line_no);
    }
    if (!obj.is_object() || !obj.contains("fingerprint") || !obj["fingerprint"].is_string() ||
        !obj.contains("response") || !obj["response"].is_string()) {
      throw Error(ErrorCode::ParseError,
                  path.string() + ":" + std::to_string(line_no) + ": expected {fingerprint, response}", line_no);
    }
    if (!c.insert({obj["fingerprint"].get<std::string>(), obj["response"].get<std::string>()})) {
      throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(line_no) + ": duplicate fingerprint",
                  line_no);
    }
  }
  return c;
}

void Cassette::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  for (const CassetteEntry& e : entries_) {
    out << nlohmann::json{{"fingerprint", e.fingerprint}, {"response", e.response}}.dump() << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, "error writing " + path.string());
}

std::optional<std::string> Cassette::find(std::string_view fp) const {
  auto it = index_.find(fp);
  if (it == index_.end()) return std::nullopt;
  return entries_[it->second].response;
}

bool Cassette::insert(CassetteEntry entry) {
  if (index_.contains(entry.fingerprint)) return false;
  index_.emplace(entry.fingerprint, entries_.size());
  entries_.push_back(std::move(entry));
  return true;
}

ScriptedBackend::ScriptedBackend(CassetteMode mode, Cassette cassette, std::shared_ptr<ChatBackend> inner,
                                 std::optional<std::filesystem::path> sink)
    : mode_(mode), cassette_(std::move(cassette)), inner_(std::move(inner)), sink_(std::move(sink)) {}

std::shared_ptr<ScriptedBackend> ScriptedBackend::replay(Cassette cassette) {
  return std::shared_ptr<ScriptedBackend>(new ScriptedBackend(CassetteMode::replay, std::move(cassette), nullptr, {}));
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::record(std::shared_ptr<ChatBackend> inner,
                                                         std::optional<std::filesystem::path> sink) {
  if (!inner) throw std::invalid_argument("record mode needs an inner backend");
  if (sink) {
    std::ofstream truncate(*sink, std::ios::binary | std::ios::trunc);
    if (!truncate) throw Error(ErrorCode::IoError, "cannot write " + sink->string());
  }
  return std::shared_ptr<ScriptedBackend>(
      new ScriptedBackend(CassetteMode::record, Cassette{}, std::move(inner), std::move(sink)));
}

std::string ScriptedBackend::complete(const ChatRequest& request) {
  validate_request(request);
  const std::string fp = fingerprint(request);
  if (mode_ == CassetteMode::replay) {
    std::lock_guard lock(mu_);
    if (auto hit = cassette_.find(fp)) return *hit;
    throw Error(ErrorCode::ReplayMiss, "no cassette entry for fingerprint " + fp);
  }
  std::string response = inner_->complete(request);
  std::lock_guard lock(mu_);
  if (cassette_.insert({fp, response}) && sink_) {
    std::ofstream out(*sink_, std::ios::binary | std::ios::app);
    out << nlohmann::json{{"fingerprint", fp}, {"response", response}}.dump() << '\n';
    if (!out) throw Error(ErrorCode::IoError, "error appending to " + sink_->string());
  }
  return response;
}

Cassette ScriptedBackend::snapshot() const {
  std::lock_guard lock(mu_);
  return cassette_;
}

// ---------------------------------------------------------------------------

LabelProvider fixed_label_provider(FaultLabel label) {
  return [label](const ChatRequest&) { return label; };
}

LabelProvider dataset_label_provider(std::span<const MachineRecord> records) {
  auto labels = std::make_shared<std::unordered_map<std::string, FaultLabel>>();
  for (const MachineRecord& r : records) labels->emplace(r.machine_id, oracle_diagnose(r));
  return [labels](const ChatRequest& request) {
    auto block = find_summary_block(request);
    if (!block) return FaultLabel::unknown;
    constexpr std::string_view key = "machine: ";
    const std::size_t pos = block->find(key);
    if (pos == std::string_view::npos) return FaultLabel::unknown;
    std::string_view rest = block->substr(pos + key.size());
    const std::string id(rest.substr(0, rest.find('\n')));
    auto it = labels->find(id);
    return it == labels->end() ? FaultLabel::unknown : it->second;
  };
}

std::vector<std::string> canned_actions(FaultLabel label) {
  switch (label) {
    case FaultLabel::normal:
      return {"Continue routine condition monitoring at the current interval.",
              "Record the present readings as the baseline for future trend comparison."};
    case FaultLabel::misalignment:
      return {"Perform a laser shaft alignment of the driver-to-load coupling.",
              "Check for soft foot and correct the baseplate shims before the final alignment.",
              "Re-measure vibration at twice running speed after alignment to confirm the correction."};
    case FaultLabel::bearing_wear:
      return {"Schedule a planned shutdown to replace bearing assemblies on the affected shaft.",
              "Inspect the drained lubricant for metal debris and flush the housing.",
              "Increase vibration monitoring frequency until the replacement is completed."};
    case FaultLabel::overheating:
      return {"Inspect and clean the cooling path, including the fan and air filters.",
              "Check lubricant level and grade on all bearings.",
              "Verify the operating load against the rating before returning to full duty."};
    case FaultLabel::unknown:
      return {"Collect additional sensor data and request an on-site inspection."};
  }
  return {};
}

std::string oracle_complete(const ChatRequest& request, const LabelProvider& labels) {
  const ChatMessage* last_user = nullptr;
  for (auto it = request.messages.rbegin(); it != request.messages.rend(); ++it) {
    if (it->role == Role::user) {
      last_user = &*it;
      break;
    }
  }
  const std::optional<PhaseMarker> marker = last_user ? find_marker(last_user->content) : std::nullopt;
  if (!marker) throw Error(ErrorCode::UnknownPhaseMarker, "last user message carries no phase marker");

  switch (*marker) {
    case PhaseMarker::summary: {
      std::string out = "Key patterns observed in the sensor data:\n";
      if (auto block = find_summary_block(request)) {
        out += *block;
      } else {
        out += "No sensor summary was provided.\n";
      }
      return out;
    }
    case PhaseMarker::analysis: {
      const FaultLabel label = labels(request);
      return rationale_for(label) + "\n" + fault_line(label);
    }
    case PhaseMarker::action:
      return action_list(labels(request));
    case PhaseMarker::single:
    case PhaseMarker::single_cot: {
      const FaultLabel label = labels(request);
      std::string out;
      if (*marker == PhaseMarker::single_cot) out += "Reasoning step by step:\n";
      out += rationale_for(label) + "\n\n" + action_list(label) + "\n" + fault_line(label);
      return out;
    }
  }
  throw Error(ErrorCode::UnknownPhaseMarker, "unhandled phase marker");
}

std::string OracleBackend::complete(const ChatRequest& request) {
  validate_request(request);
  return oracle_complete(request, labels_);
}

}  // namespace faultconsult
