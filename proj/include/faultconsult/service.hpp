#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "faultconsult/evalreport.hpp"
#include "faultconsult/gateway.hpp"

namespace httplib {
class Server;
}

namespace faultconsult {

struct ServiceOptions {
  std::vector<MachineRecord> machines;
  BackendMap backends;  // consultation backends by kind (oracle, scripted, http)
  BackendMap judges;    // judge backends by kind (scripted, http)
  ConsultConfig consult;
  JudgeConfig judge;
  unsigned default_workers = 4;
};

// HTTP status for an error code in the JSON API.
int http_status(ErrorCode code);

// JSON API over a SessionStore plus asynchronous evaluation jobs. Sessions
// and jobs are held in memory and vanish with the process.
class GatewayService {
 public:
  explicit GatewayService(ServiceOptions options);
  ~GatewayService();

  GatewayService(const GatewayService&) = delete;
  GatewayService& operator=(const GatewayService&) = delete;

  // Binds `host`; port 0 picks a free port. Returns the bound port or -1.
  int bind(const std::string& host, int port);
  // Blocks serving requests until stop().
  bool listen_after_bind();
  void stop();

  SessionStore& sessions() { return store_; }

 private:
  struct Job {
    std::string id;
    std::string status = "running";  // running | done | failed
    std::optional<std::string> error;
    std::optional<EvalReport> report;
  };

  void install_routes();
  std::string start_job(std::vector<Strategy> strategies, std::shared_ptr<ChatBackend> backend,
                        std::shared_ptr<ChatBackend> judge, unsigned workers);

  ServiceOptions options_;
  SessionStore store_;
  std::unique_ptr<httplib::Server> server_;
  std::mutex jobs_mu_;
  std::map<std::string, std::shared_ptr<Job>> jobs_;
  std::vector<std::thread> job_threads_;
};

}  // namespace faultconsult
