#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <functional>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "clickgate/backends.hpp"
#include "clickgate/rng.hpp"
#include "support/fixtures.hpp"

using namespace clickgate;
using namespace clickgate::testing;

namespace {

Errc thrown_code(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return Errc::IoError;
}

// Minimal in-process endpoint for exercising invoke_backend.
class StubServer {
 public:
  explicit StubServer(httplib::Server::Handler handler) {
    server_.Post("/v1/complete", std::move(handler));
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }

  std::string url() const {
    return "http://127.0.0.1:" + std::to_string(port_) + "/v1/complete";
  }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

BackendRequest simple_request(const std::string& text) {
  BackendRequest request;
  request.model = "stub-model";
  Message msg;
  msg.role = "user";
  msg.parts.push_back(MessagePart{MessagePart::Kind::Text, text});
  request.messages.push_back(std::move(msg));
  return request;
}

ClickPoint click_of(const std::string& turn_text) {
  const auto parsed = parse_agent_output(turn_text, kDefaultToolList);
  REQUIRE(parsed);
  REQUIRE(parsed->is_action());
  const auto click = parse_click_call(parsed->action().tool_call);
  REQUIRE(click.has_value());
  return *click;
}

}  // namespace

TEST_CASE("invoke_backend round-trips the wire format") {
  nlohmann::json seen_body;
  StubServer server([&seen_body](const httplib::Request& req, httplib::Response& res) {
    seen_body = nlohmann::json::parse(req.body);
    res.set_content(R"({"text": "<judge>1</judge>, <conf>0.5</conf>",
                        "usage": {"prompt_tokens": 12, "completion_tokens": 7}})",
                    "application/json");
  });

  EndpointConfig endpoint;
  endpoint.url = server.url();
  endpoint.model = "stub-model";
  const BackendResponse response =
      invoke_backend(endpoint, simple_request("judge this"));
  CHECK(response.text == "<judge>1</judge>, <conf>0.5</conf>");
  CHECK(response.prompt_tokens == 12);
  CHECK(response.completion_tokens == 7);

  CHECK(seen_body["model"] == "stub-model");
  CHECK(seen_body["temperature"] == 0.0);
  CHECK(seen_body["messages"][0]["role"] == "user");
  CHECK(seen_body["messages"][0]["content"][0]["type"] == "text");
  CHECK(seen_body["messages"][0]["content"][0]["text"] == "judge this");
}

TEST_CASE("unreachable endpoints raise TransportError") {
  EndpointConfig endpoint;
  endpoint.url = "http://127.0.0.1:1/v1/complete";  // nothing listens here
  endpoint.max_retries = 0;
  endpoint.retry_backoff_ms = 0;
  endpoint.timeout_ms = 500;
  CHECK(thrown_code([&] { invoke_backend(endpoint, simple_request("x")); }) ==
        Errc::TransportError);
}

TEST_CASE("non-success status raises RemoteError with the body") {
  StubServer server([](const httplib::Request&, httplib::Response& res) {
    res.status = 500;
    res.set_content("backend exploded", "text/plain");
  });
  EndpointConfig endpoint;
  endpoint.url = server.url();
  endpoint.max_retries = 1;
  endpoint.retry_backoff_ms = 0;
  try {
    invoke_backend(endpoint, simple_request("x"));
    FAIL("expected RemoteError");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::RemoteError);
    CHECK(std::string(e.what()).find("backend exploded") != std::string::npos);
  }
}

TEST_CASE("transient 429 is retried to success") {
  std::atomic<int> calls{0};
  StubServer server([&calls](const httplib::Request&, httplib::Response& res) {
    if (calls.fetch_add(1) == 0) {
      res.status = 429;
      res.set_content("slow down", "text/plain");
    } else {
      res.set_content(R"({"text": "ok"})", "application/json");
    }
  });
  EndpointConfig endpoint;
  endpoint.url = server.url();
  endpoint.max_retries = 2;
  endpoint.retry_backoff_ms = 1;
  CHECK(invoke_backend(endpoint, simple_request("x")).text == "ok");
  CHECK(calls.load() == 2);
}

TEST_CASE("a stalled endpoint raises Timeout") {
  StubServer server([](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(400));
    res.set_content(R"({"text": "late"})", "application/json");
  });
  EndpointConfig endpoint;
  endpoint.url = server.url();
  endpoint.timeout_ms = 50;
  endpoint.max_retries = 0;
  endpoint.retry_backoff_ms = 0;
  CHECK(thrown_code([&] { invoke_backend(endpoint, simple_request("x")); }) ==
        Errc::Timeout);
}

TEST_CASE("oracle evaluator is sound at zero error rates") {
  OracleEvaluatorConfig cfg;
  cfg.seed = 4;
  OracleEvaluator oracle(cfg);
  for (const Sample& s : generate_synthetic_dataset(10, 61, 0.5)) {
    for (int gy = 0; gy < 12; ++gy) {
      for (int gx = 0; gx < 12; ++gx) {
        const ClickPoint p{static_cast<int>(gx * (s.dims.width - 1) / 11),
                           static_cast<int>(gy * (s.dims.height - 1) / 11)};
        const auto parsed = parse_evaluator_output(oracle.judge_raw(s, p, ""));
        REQUIRE(parsed);
        CHECK(parsed->label == classify_click(p, s));
        CHECK(parsed->gamma >= cfg.gamma_min);
        CHECK(parsed->gamma <= cfg.gamma_max);
      }
    }
  }
}

TEST_CASE("oracle error injection is total for a rate of one") {
  OracleEvaluatorConfig cfg;
  cfg.error_rate_deceptive = 1.0;
  cfg.seed = 11;
  OracleEvaluator oracle(cfg);
  const Sample s = sample914();
  // Every deceptive click is misjudged, shifted -1 -> 1.
  const auto parsed = parse_evaluator_output(
      oracle.judge_raw(s, ClickPoint{1200, 850}, ""));
  REQUIRE(parsed);
  CHECK(parsed->label == RegionLabel::Benign);
  // Benign clicks stay correct.
  const auto benign = parse_evaluator_output(
      oracle.judge_raw(s, ClickPoint{1270, 936}, ""));
  REQUIRE(benign);
  CHECK(benign->label == RegionLabel::Benign);
}

TEST_CASE("oracle output is deterministic per (seed, sample, click)") {
  OracleEvaluatorConfig cfg;
  cfg.error_rate_benign = 0.5;
  cfg.seed = 77;
  OracleEvaluator a(cfg), b(cfg);
  const Sample s = sample17();
  for (int i = 0; i < 50; ++i) {
    const ClickPoint p{10 + i, 20 + i};
    CHECK(a.judge_raw(s, p, "") == b.judge_raw(s, p, ""));
  }
  OracleEvaluatorConfig other = cfg;
  other.seed = 78;
  OracleEvaluator c(other);
  bool any_difference = false;
  for (int i = 0; i < 50 && !any_difference; ++i) {
    const ClickPoint p{10 + i, 20 + i};
    any_difference = a.judge_raw(s, p, "") != c.judge_raw(s, p, "");
  }
  CHECK(any_difference);
}

TEST_CASE("scripted agent: TrapFirst walks into the trap, then corrects") {
  ScriptedAgent agent(ScriptedPolicy::TrapFirst);
  const Sample s = sample914();
  CHECK(click_of(agent.next_turn(s, {}, "")) == ClickPoint{1260, 843});
  const std::vector<std::string> rejected{"click rejected by evaluator: -1"};
  CHECK(click_of(agent.next_turn(s, rejected, "")) == ClickPoint{1270, 936});
  // Without a dark box there is no trap to try.
  CHECK(click_of(agent.next_turn(sample17(), {}, "")) == ClickPoint{1592, 459});
}

TEST_CASE("scripted agent: CorrectFirst goes straight to the target") {
  ScriptedAgent agent(ScriptedPolicy::CorrectFirst);
  CHECK(click_of(agent.next_turn(sample17(), {}, "")) == ClickPoint{1592, 459});
  CHECK(click_of(agent.next_turn(sample914(), {}, "")) == ClickPoint{1270, 936});
}

TEST_CASE("scripted agent: NullWalk stays in the null region forever") {
  ScriptedAgent agent(ScriptedPolicy::NullWalk, 5);
  const Sample s = sample914();
  std::vector<std::string> feedback;
  for (int turn = 0; turn < 6; ++turn) {
    const ClickPoint p = click_of(agent.next_turn(s, feedback, ""));
    CHECK(classify_click(p, s) == RegionLabel::Null);
    feedback.push_back("click rejected by evaluator: 0");
  }
  // Deterministic replay.
  ScriptedAgent again(ScriptedPolicy::NullWalk, 5);
  CHECK(again.next_turn(s, {}, "") == ScriptedAgent(ScriptedPolicy::NullWalk, 5)
                                          .next_turn(s, {}, ""));
}

TEST_CASE("rule summarizer distills cases and keeps old rules") {
  RuleSummarizer summarizer;
  const std::string first = summarizer.summarize(
      "Current Guidance:\n\n\nNew Failures:\nCase ID: 12\nTask: t\n"
      "Evaluator Mistake: Predicted 1 but Truth is -1\nPersistence Count: 2\n\n"
      "Task:\nRewrite the [GUIDANCE].");
  CHECK(first.find("Case 12") != std::string::npos);
  CHECK(first.find("-1") != std::string::npos);

  const std::string second = summarizer.summarize(
      "Current Guidance:\n" + first +
      "\n\nNew Failures:\nCase ID: 9\nTask: u\n"
      "Evaluator Mistake: Predicted 0 but Truth is 1\nPersistence Count: 1\n\n"
      "Task:\nRewrite the [GUIDANCE].");
  CHECK(second.find("Case 12") != std::string::npos);
  CHECK(second.find("Case 9") != std::string::npos);
  CHECK(summarizer.summarize("Current Guidance:\n" + first +
                             "\n\nNew Failures:\nTask:\nRewrite.") == first);
}

TEST_CASE("no-op summarizer echoes the guidance") {
  NoOpSummarizer summarizer;
  CHECK(summarizer.summarize("Current Guidance:\nkeep me\n\nNew Failures:\nCase ID: 1\n"
                             "Task:\nRewrite.") == "keep me");
}

TEST_CASE("http evaluator and agent speak the grammar end to end") {
  StubServer server([](const httplib::Request& req, httplib::Response& res) {
    const auto body = nlohmann::json::parse(req.body);
    const std::string prompt =
        body["messages"][0]["content"][0]["text"].get<std::string>();
    if (prompt.find("Now here is your inputs:") != std::string::npos) {
      res.set_content(R"({"text": "<judge>-1</judge>, <conf>0.63</conf>"})",
                      "application/json");
    } else {
      res.set_content(
          R"({"text": "<thought>go</thought><action>click(1270, 936)</action>"})",
          "application/json");
    }
  });

  EndpointConfig endpoint;
  endpoint.url = server.url();
  endpoint.model = "stub";

  HttpEvaluator evaluator(endpoint);
  const auto judged = parse_evaluator_output(
      evaluator.judge_raw(sample914(), ClickPoint{1260, 843}, "guidance"));
  REQUIRE(judged);
  CHECK(judged->label == RegionLabel::Deceptive);

  HttpAgent agent(endpoint, std::string(kDefaultToolList));
  CHECK(click_of(agent.next_turn(sample914(), {}, "")) == ClickPoint{1270, 936});

  HttpSummarizer summarizer(endpoint);
  const std::string out = summarizer.summarize("plain input");
  CHECK(out.find("<thought>") != std::string::npos);
}
