#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "faultconsult/consult.hpp"
#include "json.hpp"

namespace faultconsult {

enum class SessionStatus { awaiting_advance, in_flight, complete, failed };

std::string_view to_token(SessionStatus status);

struct SessionState {
  std::string session_id;
  std::string machine_id;
  Strategy strategy = Strategy::multi_round;
  std::string backend_kind;
  std::size_t phase_index = 0;  // phases completed so far
  std::size_t phase_count = 0;
  SessionStatus status = SessionStatus::awaiting_advance;
  ConsultationTranscript transcript;
  std::optional<DiagnosisResult> diagnosis;
  std::optional<std::string> error;  // last failure, for failed sessions
};

inline constexpr int kSessionPayloadVersion = 1;

nlohmann::json session_to_json(const SessionState& state);
nlohmann::json diagnosis_to_json(const DiagnosisResult& diagnosis);
nlohmann::json transcript_to_json(const ConsultationTranscript& transcript);

using BackendMap = std::map<std::string, std::shared_ptr<ChatBackend>, std::less<>>;

// In-memory consultation sessions for interactive use. Thread-safe; each
// session admits one in-flight phase at a time. Sessions live for the
// lifetime of the store.
class SessionStore {
 public:
  SessionStore(std::vector<MachineRecord> machines, BackendMap backends, ConsultConfig config);

  // UnknownMachine, BackendUnavailable.
  SessionState create_session(const std::string& machine_id, Strategy strategy, const std::string& backend_kind);

  // Runs one phase. UnknownSession, SessionBusy, SessionComplete,
  // SessionFailed (backend failure, now or earlier), InvalidRequest (note
  // outside the allowed phases; the session is left untouched).
  SessionState advance_session(const std::string& session_id, std::optional<std::string> operator_note);

  SessionState get(const std::string& session_id) const;
  std::vector<SessionState> list() const;

  const std::vector<MachineRecord>& machines() const { return machines_; }
  const MachineRecord* find_machine(const std::string& machine_id) const;
  std::shared_ptr<ChatBackend> backend(const std::string& kind) const;
  const ConsultConfig& config() const { return config_; }

 private:
  struct Entry {
    std::string backend_kind;
    SessionStatus status = SessionStatus::awaiting_advance;
    std::unique_ptr<ConsultationSession> session;
    std::optional<std::string> error;
    SessionState cached;  // refreshed by the thread that owns the session
  };

  SessionState snapshot(const Entry& entry) const;

  std::vector<MachineRecord> machines_;
  BackendMap backends_;
  ConsultConfig config_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::vector<std::string> order_;
};

}  // namespace faultconsult
