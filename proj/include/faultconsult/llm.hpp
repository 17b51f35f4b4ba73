#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "faultconsult/domain.hpp"

namespace faultconsult {

enum class Role { system, user, assistant };

std::string_view to_token(Role role);
std::optional<Role> role_from_token(std::string_view token);

struct ChatMessage {
  Role role = Role::user;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
};

// Throws InvalidRequest unless: messages non-empty with non-empty content,
// the first message is system or user, no two consecutive assistant
// messages, temperature in [0, 2].
void validate_request(const ChatRequest& request);

// Lowercase hex SHA-256 over a length-prefixed encoding of the model, the
// temperature's IEEE-754 bits, and every (role, content) pair in order.
std::string fingerprint(const ChatRequest& request);

// Contract shared by every backend: one assistant content string per call.
// Implementations are safe for concurrent complete() calls.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual std::string complete(const ChatRequest& request) = 0;
  virtual std::string_view kind() const = 0;
};

// Machine-readable phase markers embedded as the first line of every
// consultation prompt, e.g. `<!--phase:analysis-->`.
enum class PhaseMarker { summary, analysis, action, single, single_cot };

std::string_view to_token(PhaseMarker marker);
std::string marker_line(PhaseMarker marker);
// First marker found in `text`, if any.
std::optional<PhaseMarker> find_marker(std::string_view text);

// ---------------------------------------------------------------------------
// Cassettes

struct CassetteEntry {
  std::string fingerprint;
  std::string response;

  bool operator==(const CassetteEntry&) const = default;
};

enum class CassetteMode { record, replay };

// Fingerprint-keyed request/response store, persisted as JSON Lines.
class Cassette {
 public:
  Cassette() = default;
  explicit Cassette(std::vector<CassetteEntry> entries);

  static Cassette load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::optional<std::string> find(std::string_view fingerprint) const;
  // False (and no change) when the fingerprint is already present.
  bool insert(CassetteEntry entry);

  const std::vector<CassetteEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::vector<CassetteEntry> entries_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

// Replay mode answers from the cassette only (ReplayMiss otherwise). Record
// mode forwards to `inner` and appends each new fingerprint; appends are
// serialized and, when `sink` is set, flushed to that file as they happen.
class ScriptedBackend final : public ChatBackend {
 public:
  static std::shared_ptr<ScriptedBackend> replay(Cassette cassette);
  static std::shared_ptr<ScriptedBackend> record(std::shared_ptr<ChatBackend> inner,
                                                 std::optional<std::filesystem::path> sink = std::nullopt);

  std::string complete(const ChatRequest& request) override;
  std::string_view kind() const override { return "scripted"; }

  CassetteMode mode() const { return mode_; }
  Cassette snapshot() const;

 private:
  ScriptedBackend(CassetteMode mode, Cassette cassette, std::shared_ptr<ChatBackend> inner,
                  std::optional<std::filesystem::path> sink);

  CassetteMode mode_;
  mutable std::mutex mu_;
  Cassette cassette_;
  std::shared_ptr<ChatBackend> inner_;
  std::optional<std::filesystem::path> sink_;
};

// ---------------------------------------------------------------------------
// Oracle backend

// Supplies the label the oracle backend should assert for a request.
using LabelProvider = std::function<FaultLabel(const ChatRequest&)>;

LabelProvider fixed_label_provider(FaultLabel label);

// Precomputes oracle_diagnose for every record and resolves requests by the
// `machine: <id>` line of the sensor summary in the conversation. Requests
// that name no known machine resolve to unknown.
LabelProvider dataset_label_provider(std::span<const MachineRecord> records);

// Canned maintenance actions per label, in order.
std::vector<std::string> canned_actions(FaultLabel label);

// Answers based on the phase marker of the last user message; throws
// UnknownPhaseMarker if it carries none.
std::string oracle_complete(const ChatRequest& request, const LabelProvider& labels);

inline constexpr double kOracleConfidence = 0.95;

class OracleBackend final : public ChatBackend {
 public:
  explicit OracleBackend(LabelProvider labels) : labels_(std::move(labels)) {}
  std::string complete(const ChatRequest& request) override;
  std::string_view kind() const override { return "oracle"; }

 private:
  LabelProvider labels_;
};

// ---------------------------------------------------------------------------
// OpenAI-compatible HTTP backend

struct HttpBackendConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string api_key;
  std::chrono::milliseconds timeout{60000};
  int max_attempts = 3;
  // Delay before retry k (k = 0 after the first failure), scaled by a
  // uniform jitter factor in [1 - jitter, 1 + jitter].
  std::vector<std::chrono::milliseconds> backoff{std::chrono::milliseconds{500}, std::chrono::milliseconds{1000},
                                                 std::chrono::milliseconds{2000}};
  double jitter = 0.2;
  std::function<void(std::chrono::milliseconds)> sleep;  // defaults to std::this_thread::sleep_for

  // FAULTCONSULT_BASE_URL / FAULTCONSULT_API_KEY, with defaults above.
  static HttpBackendConfig from_env();
};

// Model name read from FAULTCONSULT_MODEL, default "gpt-4".
std::string model_from_env();

class HttpBackend final : public ChatBackend {
 public:
  explicit HttpBackend(HttpBackendConfig config);
  std::string complete(const ChatRequest& request) override;
  std::string_view kind() const override { return "http"; }

  // Request body in the chat-completions wire format.
  static std::string request_body(const ChatRequest& request);
  // `choices[0].message.content`; EmptyCompletion when absent or empty.
  static std::string parse_response(std::string_view body);

 private:
  HttpBackendConfig config_;
  std::string scheme_host_port_;
  std::string path_prefix_;
};

}  // namespace faultconsult
