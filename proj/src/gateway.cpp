#include "faultconsult/gateway.hpp"

namespace faultconsult {

using nlohmann::json;

std::string_view to_token(SessionStatus status) {
  switch (status) {
    case SessionStatus::awaiting_advance: return "awaiting_advance";
    case SessionStatus::in_flight: return "in_flight";
    case SessionStatus::complete: return "complete";
    case SessionStatus::failed: return "failed";
  }
  return "failed";
}

json diagnosis_to_json(const DiagnosisResult& d) {
  json warnings = json::array();
  for (DiagnosisWarning w : d.parse_warnings) warnings.push_back(std::string(code_name(w)));
  return {{"label", std::string(to_token(d.label))},
          {"confidence", d.confidence},
          {"rationale", d.rationale},
          {"actions", d.actions},
          {"warnings", std::move(warnings)}};
}

json transcript_to_json(const ConsultationTranscript& t) {
  json phases = json::array();
  for (const PhaseRecord& p : t.phases) {
    phases.push_back({{"phase", std::string(to_token(p.phase))},
                      {"operator_note", p.operator_note ? json(*p.operator_note) : json(nullptr)},
                      {"prompt", p.prompt},
                      {"response", p.response},
                      {"retries_used", p.retries_used}});
  }
  json messages = json::array();
  for (const ChatMessage& m : t.messages) messages.push_back({{"role", std::string(to_token(m.role))}, {"content", m.content}});
  return {{"session_id", t.session_id},
          {"machine_id", t.machine_id},
          {"strategy", std::string(to_token(t.strategy))},
          {"phases", std::move(phases)},
          {"messages", std::move(messages)}};
}

json session_to_json(const SessionState& s) {
  json t = transcript_to_json(s.transcript);
  return {{"version", kSessionPayloadVersion},
          {"session_id", s.session_id},
          {"machine_id", s.machine_id},
          {"strategy", std::string(to_token(s.strategy))},
          {"backend", s.backend_kind},
          {"phase_index", s.phase_index},
          {"phase_count", s.phase_count},
          {"status", std::string(to_token(s.status))},
          {"phases", t["phases"]},
          {"diagnosis", s.diagnosis ? diagnosis_to_json(*s.diagnosis) : json(nullptr)},
          {"error", s.error ? json(*s.error) : json(nullptr)}};
}

SessionStore::SessionStore(std::vector<MachineRecord> machines, BackendMap backends, ConsultConfig config)
    : machines_(std::move(machines)), backends_(std::move(backends)), config_(std::move(config)) {}

const MachineRecord* SessionStore::find_machine(const std::string& machine_id) const {
  for (const MachineRecord& m : machines_) {
    if (m.machine_id == machine_id) return &m;
  }
  return nullptr;
}

std::shared_ptr<ChatBackend> SessionStore::backend(const std::string& kind) const {
  auto it = backends_.find(kind);
  return it == backends_.end() ? nullptr : it->second;
}

SessionState SessionStore::snapshot(const Entry& e) const {
  SessionState s;
  const ConsultationTranscript& t = e.session->transcript();
  s.session_id = t.session_id;
  s.machine_id = t.machine_id;
  s.strategy = t.strategy;
  s.backend_kind = e.backend_kind;
  s.phase_index = e.session->phases_done();
  s.phase_count = e.session->phase_count();
  s.status = e.status;
  s.transcript = t;
  s.diagnosis = e.session->diagnosis();
  s.error = e.error;
  return s;
}

SessionState SessionStore::create_session(const std::string& machine_id, Strategy strategy,
                                          const std::string& backend_kind) {
  const MachineRecord* machine = find_machine(machine_id);
  if (!machine) throw Error(ErrorCode::UnknownMachine, "unknown machine '" + machine_id + "'");
  auto be = backend(backend_kind);
  if (!be) throw Error(ErrorCode::BackendUnavailable, "backend '" + backend_kind + "' is not configured");

  auto entry = std::make_shared<Entry>();
  entry->backend_kind = backend_kind;
  std::lock_guard lock(mu_);
  std::string id;
  do {
    id = random_session_id();
  } while (sessions_.contains(id));
  entry->session = std::make_unique<ConsultationSession>(*machine, strategy, std::move(be), config_, id);
  entry->cached = snapshot(*entry);
  sessions_.emplace(id, entry);
  order_.push_back(id);
  return entry->cached;
}

SessionState SessionStore::advance_session(const std::string& session_id, std::optional<std::string> note) {
  std::shared_ptr<Entry> entry;
  {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) throw Error(ErrorCode::UnknownSession, "unknown session '" + session_id + "'");
    entry = it->second;
    switch (entry->status) {
      case SessionStatus::in_flight:
        throw Error(ErrorCode::SessionBusy, "session " + session_id + " already has a phase in flight");
      case SessionStatus::complete:
        throw Error(ErrorCode::SessionComplete, "session " + session_id + " is complete");
      case SessionStatus::failed:
        throw Error(ErrorCode::SessionFailed, "session " + session_id + " has failed: " + entry->error.value_or(""));
      case SessionStatus::awaiting_advance:
        break;
    }
    entry->status = SessionStatus::in_flight;
    entry->cached.status = SessionStatus::in_flight;
  }

  // Only the thread that set in_flight touches the session until it is reset.
  try {
    entry->session->advance(std::move(note));
  } catch (const Error& e) {
    std::lock_guard lock(mu_);
    if (e.code() == ErrorCode::InvalidRequest) {
      entry->status = SessionStatus::awaiting_advance;
      entry->cached.status = entry->status;
      throw;
    }
    entry->status = SessionStatus::failed;
    entry->error = std::string(code_name(e.code())) + ": " + e.what();
    entry->cached = snapshot(*entry);
    throw Error(ErrorCode::SessionFailed, "session " + session_id + " failed: " + *entry->error);
  } catch (const std::exception& e) {
    std::lock_guard lock(mu_);
    entry->status = SessionStatus::failed;
    entry->error = e.what();
    entry->cached = snapshot(*entry);
    throw Error(ErrorCode::SessionFailed, "session " + session_id + " failed: " + *entry->error);
  }

  std::lock_guard lock(mu_);
  entry->status = entry->session->complete() ? SessionStatus::complete : SessionStatus::awaiting_advance;
  entry->cached = snapshot(*entry);
  return entry->cached;
}

SessionState SessionStore::get(const std::string& session_id) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw Error(ErrorCode::UnknownSession, "unknown session '" + session_id + "'");
  return it->second->cached;
}

std::vector<SessionState> SessionStore::list() const {
  std::lock_guard lock(mu_);
  std::vector<SessionState> out;
  for (const std::string& id : order_) out.push_back(sessions_.at(id)->cached);
  return out;
}

}  // namespace faultconsult
