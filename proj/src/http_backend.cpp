#include <cstdlib>
#include <random>
#include <regex>
#include <thread>

#include "faultconsult/error.hpp"
#include "faultconsult/llm.hpp"
#include "httplib.h"
#include "json.hpp"

namespace faultconsult {

namespace {

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return (v && *v) ? std::string(v) : std::move(fallback);
}

double jitter_factor(double jitter) {
  thread_local std::mt19937_64 gen{std::random_device{}()};
  std::uniform_real_distribution<double> dist(1.0 - jitter, 1.0 + jitter);
  return dist(gen);
}

std::string excerpt(std::string_view body) {
  constexpr std::size_t kMax = 200;
  return std::string(body.substr(0, kMax)) + (body.size() > kMax ? "..." : "");
}

}  // namespace

HttpBackendConfig HttpBackendConfig::from_env() {
  HttpBackendConfig c;
  c.base_url = env_or("FAULTCONSULT_BASE_URL", c.base_url);
  c.api_key = env_or("FAULTCONSULT_API_KEY", "");
  return c;
}

std::string model_from_env() { return env_or("FAULTCONSULT_MODEL", "gpt-4"); }

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
  static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)", std::regex::icase);
  std::smatch m;
  if (!std::regex_match(config_.base_url, m, url_re)) {
    throw Error(ErrorCode::ConfigError, "invalid base URL '" + config_.base_url + "'");
  }
  scheme_host_port_ = m[1].str();
  path_prefix_ = m[2].matched ? m[2].str() : std::string{};
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
  if (config_.max_attempts < 1) config_.max_attempts = 1;
  if (!config_.sleep) config_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::string HttpBackend::request_body(const ChatRequest& request) {
  nlohmann::json messages = nlohmann::json::array();
  for (const ChatMessage& m : request.messages) {
    messages.push_back({{"role", std::string(to_token(m.role))}, {"content", m.content}});
  }
  nlohmann::json body = {{"model", request.model}, {"messages", std::move(messages)}, {"temperature", request.temperature}};
  return body.dump();
}

std::string HttpBackend::parse_response(std::string_view body) {
  nlohmann::json doc = nlohmann::json::parse(body, nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::TransportError, "response body is not JSON: " + excerpt(body));
  const nlohmann::json* content = nullptr;
  if (doc.is_object() && doc.contains("choices") && doc["choices"].is_array() && !doc["choices"].empty()) {
    const auto& choice = doc["choices"][0];
    if (choice.is_object() && choice.contains("message") && choice["message"].is_object() &&
        choice["message"].contains("content")) {
      content = &choice["message"]["content"];
    }
  }
  if (!content || !content->is_string() || content->get<std::string>().empty()) {
    throw Error(ErrorCode::EmptyCompletion, "response carries no completion content");
  }
  return content->get<std::string>();
}

std::string HttpBackend::complete(const ChatRequest& request) {
  validate_request(request);
  const std::string body = request_body(request);
  const std::string path = path_prefix_ + "/chat/completions";

  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  std::string last_failure;
  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    httplib::Client client(scheme_host_port_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    auto res = client.Post(path, headers, body, "application/json");
    if (!res) {
      last_failure = "transport failure: " + httplib::to_string(res.error());
    } else if (res->status == 429 || res->status >= 500) {
      last_failure = "HTTP " + std::to_string(res->status) + ": " + excerpt(res->body);
    } else if (res->status >= 200 && res->status < 300) {
      return parse_response(res->body);
    } else {
      throw Error(ErrorCode::ApiError, "HTTP " + std::to_string(res->status) + ": " + excerpt(res->body));
    }

    if (attempt < config_.max_attempts && !config_.backoff.empty()) {
      const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(attempt - 1), config_.backoff.size() - 1);
      const double ms = static_cast<double>(config_.backoff[k].count()) * jitter_factor(config_.jitter);
      config_.sleep(std::chrono::milliseconds{static_cast<std::int64_t>(ms)});
    }
  }
  throw Error(ErrorCode::TransportError,
              "giving up after " + std::to_string(config_.max_attempts) + " attempts; last " + last_failure);
}

}  // namespace faultconsult
