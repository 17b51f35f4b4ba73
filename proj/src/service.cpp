#include "faultconsult/service.hpp"

#include "faultconsult/judge.hpp"
#include "httplib.h"

namespace faultconsult {

using nlohmann::json;

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
  send_json(res, http_status(code), {{"error", {{"code", std::string(code_name(code))}, {"message", message}}}});
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  json body = json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) {
    throw Error(ErrorCode::InvalidRequest, "request body must be a JSON object");
  }
  return body;
}

std::string string_field(const json& body, const char* key) {
  auto it = body.find(key);
  if (it == body.end() || !it->is_string()) {
    throw Error(ErrorCode::InvalidRequest, std::string("missing string field '") + key + "'");
  }
  return it->get<std::string>();
}

Strategy strategy_or_throw(const std::string& token) {
  auto s = strategy_from_token(token);
  if (!s) throw Error(ErrorCode::InvalidRequest, "unknown strategy '" + token + "'");
  return *s;
}

// Runs `fn`, translating failures into the JSON error envelope.
template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    send_error(res, e.code(), e.what());
  } catch (const std::exception& e) {
    send_json(res, 500, {{"error", {{"code", "InternalError"}, {"message", e.what()}}}});
  }
}

}  // namespace

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownSession:
    case ErrorCode::UnknownMachine:
    case ErrorCode::UnknownJob:
    case ErrorCode::MissingStrategy:
      return 404;
    case ErrorCode::SessionBusy:
    case ErrorCode::SessionComplete:
      return 409;
    case ErrorCode::SessionFailed:
    case ErrorCode::TransportError:
    case ErrorCode::ApiError:
    case ErrorCode::ReplayMiss:
    case ErrorCode::EmptyCompletion:
    case ErrorCode::UnknownPhaseMarker:
    case ErrorCode::JudgeUnparseable:
      return 502;
    case ErrorCode::BackendUnavailable:
      return 503;
    default:
      return 400;
  }
}

GatewayService::GatewayService(ServiceOptions options)
    : options_(std::move(options)),
      store_(options_.machines, options_.backends, options_.consult),
      server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

GatewayService::~GatewayService() {
  stop();
  std::vector<std::thread> threads;
  {
    std::lock_guard lock(jobs_mu_);
    threads.swap(job_threads_);
  }
  for (auto& t : threads) t.join();
}

int GatewayService::bind(const std::string& host, int port) {
  if (port == 0) return server_->bind_to_any_port(host);
  return server_->bind_to_port(host, port) ? port : -1;
}

bool GatewayService::listen_after_bind() { return server_->listen_after_bind(); }

void GatewayService::stop() {
  if (server_) server_->stop();
}

std::string GatewayService::start_job(std::vector<Strategy> strategies, std::shared_ptr<ChatBackend> backend,
                                      std::shared_ptr<ChatBackend> judge, unsigned workers) {
  auto job = std::make_shared<Job>();
  job->id = random_session_id();
  std::lock_guard lock(jobs_mu_);
  jobs_.emplace(job->id, job);
  job_threads_.emplace_back([this, job, strategies = std::move(strategies), backend, judge, workers] {
    EvalConfig config;
    config.workers = workers;
    config.consult = options_.consult;
    config.judge = options_.judge;
    std::optional<EvalReport> report;
    std::optional<std::string> error;
    try {
      report = evaluate_dataset(options_.machines, strategies, backend, judge, config).report;
    } catch (const std::exception& e) {
      error = e.what();
    }
    std::lock_guard lock(jobs_mu_);
    job->report = std::move(report);
    job->error = std::move(error);
    job->status = job->report ? "done" : "failed";
  });
  return job->id;
}

void GatewayService::install_routes() {
  httplib::Server& srv = *server_;
  srv.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Headers", "Content-Type"},
                           {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  srv.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  srv.Get("/api/machines", [this](const httplib::Request&, httplib::Response& res) {
    json out = json::array();
    for (const MachineRecord& m : store_.machines()) {
      out.push_back({{"machine_id", m.machine_id},
                     {"machine_type", m.machine_type},
                     {"rotation_freq_hz", m.rotation_freq_hz},
                     {"series", m.series.size()},
                     {"maintenance_events", m.maintenance.size()}});
    }
    send_json(res, 200, out);
  });

  srv.Get("/api/sessions", [this](const httplib::Request&, httplib::Response& res) {
    json out = json::array();
    for (const SessionState& s : store_.list()) out.push_back(session_to_json(s));
    send_json(res, 200, out);
  });

  srv.Post("/api/sessions", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = parse_body(req);
      const SessionState s = store_.create_session(string_field(body, "machine_id"),
                                                   strategy_or_throw(string_field(body, "strategy")),
                                                   string_field(body, "backend"));
      send_json(res, 201, session_to_json(s));
    });
  });

  srv.Post(R"(/api/sessions/([0-9A-Za-z]+)/advance)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = parse_body(req);
      std::optional<std::string> note;
      if (auto it = body.find("operator_note"); it != body.end() && !it->is_null()) {
        if (!it->is_string()) throw Error(ErrorCode::InvalidRequest, "operator_note must be a string");
        note = it->get<std::string>();
      }
      send_json(res, 200, session_to_json(store_.advance_session(req.matches[1], std::move(note))));
    });
  });

  srv.Get(R"(/api/sessions/([0-9A-Za-z]+))", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, session_to_json(store_.get(req.matches[1]))); });
  });

  srv.Post("/api/evaluate", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = parse_body(req);
      std::vector<Strategy> strategies;
      auto it = body.find("strategies");
      if (it == body.end() || !it->is_array() || it->empty()) {
        throw Error(ErrorCode::ConfigError, "strategies must be a non-empty array");
      }
      for (const json& s : *it) {
        if (!s.is_string()) throw Error(ErrorCode::InvalidRequest, "strategy entries must be strings");
        strategies.push_back(strategy_or_throw(s.get<std::string>()));
      }
      const std::string backend_kind = string_field(body, "backend");
      auto backend = store_.backend(backend_kind);
      if (!backend) throw Error(ErrorCode::BackendUnavailable, "backend '" + backend_kind + "' is not configured");

      std::shared_ptr<ChatBackend> judge;
      if (auto j = body.find("judge"); j != body.end() && !j->is_null()) {
        if (!j->is_string()) throw Error(ErrorCode::InvalidRequest, "judge must be a string");
        auto found = options_.judges.find(j->get<std::string>());
        if (found == options_.judges.end()) {
          throw Error(ErrorCode::BackendUnavailable, "judge '" + j->get<std::string>() + "' is not configured");
        }
        judge = found->second;
      }
      unsigned workers = options_.default_workers;
      if (auto w = body.find("workers"); w != body.end()) {
        if (!w->is_number_unsigned() || w->get<unsigned>() == 0) {
          throw Error(ErrorCode::InvalidRequest, "workers must be a positive integer");
        }
        workers = w->get<unsigned>();
      }
      const std::string id = start_job(std::move(strategies), std::move(backend), std::move(judge), workers);
      send_json(res, 202, {{"job_id", id}, {"status", "running"}});
    });
  });

  srv.Get(R"(/api/jobs/([0-9A-Za-z]+))", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      std::lock_guard lock(jobs_mu_);
      auto it = jobs_.find(req.matches[1]);
      if (it == jobs_.end()) throw Error(ErrorCode::UnknownJob, "unknown job '" + std::string(req.matches[1]) + "'");
      const Job& job = *it->second;
      send_json(res, 200,
                {{"job_id", job.id},
                 {"status", job.status},
                 {"report_id", job.report ? json(job.id) : json(nullptr)},
                 {"error", job.error ? json(*job.error) : json(nullptr)}});
    });
  });

  srv.Get(R"(/api/reports/([0-9A-Za-z]+))", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      EvalReport report;
      {
        std::lock_guard lock(jobs_mu_);
        auto it = jobs_.find(req.matches[1]);
        if (it == jobs_.end() || !it->second->report) {
          throw Error(ErrorCode::UnknownJob, "no report '" + std::string(req.matches[1]) + "'");
        }
        report = *it->second->report;
      }
      if (!req.has_param("layout") && !req.has_param("format")) {
        res.status = 200;
        res.set_content(report_to_json(report), "application/json");
        return;
      }
      const std::string layout_token = req.has_param("layout") ? req.get_param_value("layout") : "full";
      const std::string format_token = req.has_param("format") ? req.get_param_value("format") : "json";
      auto layout = layout_from_token(layout_token);
      auto format = format_from_token(format_token);
      if (!layout || !format) throw Error(ErrorCode::InvalidRequest, "unknown layout or format");
      const char* type = *format == Format::markdown ? "text/markdown" : *format == Format::csv ? "text/csv"
                                                                                                 : "application/json";
      res.status = 200;
      res.set_content(render_report(report, *layout, *format), type);
    });
  });
}

}  // namespace faultconsult
