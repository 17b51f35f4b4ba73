#include <atomic>
#include <thread>

#include "doctest.h"
#include "faultconsult/digest.hpp"
#include "faultconsult/error.hpp"
#include "faultconsult/llm.hpp"
#include "faultconsult/synthgen.hpp"
#include "httplib.h"
#include "json.hpp"
#include "support.hpp"

using namespace faultconsult;

namespace {

ChatRequest simple_request(std::string content = "hello") {
  ChatRequest r;
  r.model = "gpt-4";
  r.messages = {{Role::user, std::move(content)}};
  return r;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected faultconsult::Error");
  return ErrorCode::IoError;
}

// Local chat-completions stub answering from a per-call status script.
class StubServer {
 public:
  explicit StubServer(std::vector<int> statuses) : statuses_(std::move(statuses)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      const int i = calls_++;
      last_auth_ = req.get_header_value("Authorization");
      last_body_ = req.body;
      const int status = statuses_[std::min<std::size_t>(static_cast<std::size_t>(i), statuses_.size() - 1)];
      res.status = status;
      if (status == 200) {
        res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"stub answer"}}]})",
                        "application/json");
      } else {
        res.set_content(R"({"error":{"message":"nope"}})", "application/json");
      }
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }

  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
  int calls() const { return calls_; }
  std::string last_auth() const { return last_auth_; }
  std::string last_body() const { return last_body_; }

 private:
  std::vector<int> statuses_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> calls_{0};
  std::string last_auth_, last_body_;
};

HttpBackendConfig stub_config(const StubServer& s, std::vector<std::chrono::milliseconds>* sleeps) {
  HttpBackendConfig c;
  c.base_url = s.base_url();
  c.api_key = "test-key";
  c.timeout = std::chrono::milliseconds{5000};
  c.sleep = [sleeps](std::chrono::milliseconds d) { sleeps->push_back(d); };
  return c;
}

ChatRequest phase_request(PhaseMarker marker) {
  return simple_request(marker_line(marker) + "\nPlease answer.");
}

}  // namespace

TEST_SUITE("llm") {
  TEST_CASE("sha256 known answer") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  }

  TEST_CASE("fingerprint golden values") {
    // Independently computed with Python's hashlib over the documented
    // length-prefixed encoding.
    CHECK(fingerprint(simple_request()) == "ac6e1dc0a9fe626ec34aeb84097b9c6df876a0ca2cab3b8cd67c9ed6ac98b31d");
    ChatRequest r;
    r.model = "gpt-4";
    r.temperature = 0.7;
    r.messages = {{Role::system, "be brief"}, {Role::user, "Is the pump ok?"}, {Role::assistant, "Yes."},
                  {Role::user, "Why?"}};
    CHECK(fingerprint(r) == "c979c17c6db35b54b984523a0805b00d4a739e6c513719874cb868455b8874ab");
  }

  TEST_CASE("fingerprint sensitivity") {
    const ChatRequest a = simple_request("hello");
    CHECK(fingerprint(a) == fingerprint(simple_request("hello")));
    CHECK(fingerprint(a) != fingerprint(simple_request("hellp")));
    ChatRequest two;
    two.model = "gpt-4";
    two.messages = {{Role::user, "a"}, {Role::user, "b"}};
    ChatRequest swapped = two;
    std::swap(swapped.messages[0], swapped.messages[1]);
    CHECK(fingerprint(two) != fingerprint(swapped));
    ChatRequest split = two;
    split.messages = {{Role::user, "ab"}};
    CHECK(fingerprint(two) != fingerprint(split));
    ChatRequest other_model = a;
    other_model.model = "gpt-4o";
    CHECK(fingerprint(a) != fingerprint(other_model));
    ChatRequest warm = a;
    warm.temperature = 0.1;
    CHECK(fingerprint(a) != fingerprint(warm));
    ChatRequest role = a;
    role.messages[0].role = Role::system;
    CHECK(fingerprint(a) != fingerprint(role));
  }

  TEST_CASE("validate_request") {
    CHECK_NOTHROW(validate_request(simple_request()));
    ChatRequest r = simple_request();
    r.messages.clear();
    CHECK(code_of([&] { validate_request(r); }) == ErrorCode::InvalidRequest);
    r = simple_request("");
    CHECK(code_of([&] { validate_request(r); }) == ErrorCode::InvalidRequest);
    r = simple_request();
    r.temperature = 2.5;
    CHECK(code_of([&] { validate_request(r); }) == ErrorCode::InvalidRequest);
    r = simple_request();
    r.messages = {{Role::assistant, "hi"}};
    CHECK(code_of([&] { validate_request(r); }) == ErrorCode::InvalidRequest);
    r = simple_request();
    r.messages.push_back({Role::assistant, "a"});
    r.messages.push_back({Role::assistant, "b"});
    CHECK(code_of([&] { validate_request(r); }) == ErrorCode::InvalidRequest);
  }

  TEST_CASE("phase markers") {
    CHECK(marker_line(PhaseMarker::analysis) == "<!--phase:analysis-->");
    CHECK(marker_line(PhaseMarker::single_cot) == "<!--phase:single_cot-->");
    CHECK(find_marker("intro\n<!--phase:action-->\nbody") == PhaseMarker::action);
    CHECK(!find_marker("<!--phase:bogus-->"));
    CHECK(!find_marker("no marker"));
  }

  TEST_CASE("cassette replay hit and miss") {
    const ChatRequest req = simple_request("question");
    Cassette c;
    CHECK(c.insert({fingerprint(req), "stored\nanswer  with  spaces\n"}));
    CHECK(!c.insert({fingerprint(req), "other"}));
    auto backend = ScriptedBackend::replay(c);
    CHECK(backend->complete(req) == "stored\nanswer  with  spaces\n");
    try {
      backend->complete(simple_request("unseen"));
      FAIL("expected ReplayMiss");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ReplayMiss);
      CHECK(std::string(e.what()).find(fingerprint(simple_request("unseen"))) != std::string::npos);
    }
  }

  TEST_CASE("cassette persistence") {
    fctest::TempDir dir;
    Cassette c;
    c.insert({"aa", "first"});
    c.insert({"bb", "second \"quoted\"\n"});
    c.save(dir / "c.jsonl");
    const Cassette loaded = Cassette::load(dir / "c.jsonl");
    CHECK(loaded.entries() == c.entries());

    fctest::write_file(dir / "dup.jsonl", "{\"fingerprint\":\"aa\",\"response\":\"x\"}\n{\"fingerprint\":\"aa\",\"response\":\"y\"}\n");
    CHECK(code_of([&] { Cassette::load(dir / "dup.jsonl"); }) == ErrorCode::ParseError);
    fctest::write_file(dir / "bad.jsonl", "not json\n");
    CHECK(code_of([&] { Cassette::load(dir / "bad.jsonl"); }) == ErrorCode::ParseError);
  }

  TEST_CASE("record mode forwards, stores and flushes") {
    fctest::TempDir dir;
    auto inner = std::make_shared<fctest::LambdaBackend>([](const ChatRequest& r) {
      return "echo:" + r.messages.back().content;
    });
    auto rec = ScriptedBackend::record(inner, dir / "rec.jsonl");
    CHECK(rec->complete(simple_request("a")) == "echo:a");
    CHECK(rec->complete(simple_request("b")) == "echo:b");
    CHECK(rec->complete(simple_request("a")) == "echo:a");
    CHECK(rec->snapshot().size() == 2);
    const Cassette on_disk = Cassette::load(dir / "rec.jsonl");
    CHECK(on_disk.entries() == rec->snapshot().entries());
    auto replay = ScriptedBackend::replay(on_disk);
    CHECK(replay->complete(simple_request("b")) == "echo:b");
  }

  TEST_CASE("oracle backend answers by phase") {
    OracleBackend hot(fixed_label_provider(FaultLabel::overheating));
    const std::string analysis = hot.complete(phase_request(PhaseMarker::analysis));
    CHECK(analysis.substr(analysis.rfind('\n') + 1) == "FAULT: overheating | CONFIDENCE: 0.95");

    OracleBackend worn(fixed_label_provider(FaultLabel::bearing_wear));
    CHECK(worn.complete(phase_request(PhaseMarker::action)).find("replace bearing") != std::string::npos);

    const std::string cot = worn.complete(phase_request(PhaseMarker::single_cot));
    CHECK(cot.find("step by step") != std::string::npos);
    CHECK(cot.substr(cot.rfind('\n') + 1) == "FAULT: bearing_wear | CONFIDENCE: 0.95");
    CHECK(worn.complete(phase_request(PhaseMarker::single)).find("step by step") == std::string::npos);

    CHECK(code_of([&] { hot.complete(simple_request("no marker here")); }) == ErrorCode::UnknownPhaseMarker);
  }

  TEST_CASE("dataset label provider reads the machine line") {
    SynthConfig config;
    config.n_per_class = 1;
    const auto ds = generate_dataset(config);
    const auto provider = dataset_label_provider(ds);
    for (const auto& m : ds) {
      ChatRequest r = simple_request("<!--phase:summary-->\n=== SENSOR SUMMARY ===\nmachine: " + m.machine_id +
                                     "\n=== END SENSOR SUMMARY ===\n");
      CHECK(provider(r) == *m.gold_label);
    }
    CHECK(provider(simple_request("nothing")) == FaultLabel::unknown);
  }

  TEST_CASE("http backend: 429 then 200 succeeds on the second attempt") {
    StubServer stub({429, 200});
    std::vector<std::chrono::milliseconds> sleeps;
    HttpBackend backend(stub_config(stub, &sleeps));
    CHECK(backend.complete(simple_request()) == "stub answer");
    CHECK(stub.calls() == 2);
    REQUIRE(sleeps.size() == 1);
    CHECK(sleeps[0].count() >= 400);
    CHECK(sleeps[0].count() <= 600);
    CHECK(stub.last_auth() == "Bearer test-key");
    const auto body = nlohmann::json::parse(stub.last_body());
    CHECK(body["model"] == "gpt-4");
    CHECK(body["messages"][0]["content"] == "hello");
  }

  TEST_CASE("http backend: 5xx exhausts attempts") {
    StubServer stub({503});
    std::vector<std::chrono::milliseconds> sleeps;
    HttpBackend backend(stub_config(stub, &sleeps));
    CHECK(code_of([&] { backend.complete(simple_request()); }) == ErrorCode::TransportError);
    CHECK(stub.calls() == 3);
    CHECK(sleeps.size() == 2);
  }

  TEST_CASE("http backend: client errors are not retried") {
    for (int status : {400, 401, 403, 404}) {
      CAPTURE(status);
      StubServer stub({status, 200});
      std::vector<std::chrono::milliseconds> sleeps;
      HttpBackend backend(stub_config(stub, &sleeps));
      CHECK(code_of([&] { backend.complete(simple_request()); }) == ErrorCode::ApiError);
      CHECK(stub.calls() == 1);
      CHECK(sleeps.empty());
    }
  }

  TEST_CASE("http backend: connection refused is a transport error") {
    std::vector<std::chrono::milliseconds> sleeps;
    HttpBackendConfig c;
    c.base_url = "http://127.0.0.1:1";
    c.timeout = std::chrono::milliseconds{500};
    c.sleep = [&](std::chrono::milliseconds d) { sleeps.push_back(d); };
    HttpBackend backend(c);
    CHECK(code_of([&] { backend.complete(simple_request()); }) == ErrorCode::TransportError);
    CHECK(sleeps.size() == 2);
  }

  TEST_CASE("response parsing") {
    CHECK(HttpBackend::parse_response(R"({"choices":[{"message":{"content":"x"}}]})") == "x");
    CHECK(code_of([] { HttpBackend::parse_response(R"({"choices":[]})"); }) == ErrorCode::EmptyCompletion);
    CHECK(code_of([] { HttpBackend::parse_response(R"({"choices":[{"message":{"content":""}}]})"); }) ==
          ErrorCode::EmptyCompletion);
    CHECK(code_of([] { HttpBackend::parse_response("<html>"); }) == ErrorCode::TransportError);
    CHECK(code_of([] { HttpBackend(HttpBackendConfig{.base_url = "ftp://x"}); }) == ErrorCode::ConfigError);
  }
}
