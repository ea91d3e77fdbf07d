#include "clickgate/backends.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "clickgate/rng.hpp"

namespace clickgate {

using nlohmann::json;

namespace {

struct UrlParts {
  std::string host_port;  // "host:port"
  std::string path;
};

UrlParts split_url(const std::string& url) {
  if (url.rfind("https://", 0) == 0) {
    fail(Errc::TransportError, "https endpoints require a TLS build; use http");
  }
  if (url.rfind("http://", 0) != 0) {
    fail(Errc::ConfigError, "endpoint url must start with http://");
  }
  const std::string rest = url.substr(7);
  const std::size_t slash = rest.find('/');
  UrlParts parts;
  parts.host_port = slash == std::string::npos ? rest : rest.substr(0, slash);
  parts.path = slash == std::string::npos ? "/" : rest.substr(slash);
  if (parts.host_port.empty()) {
    fail(Errc::ConfigError, "endpoint url has no host");
  }
  return parts;
}

json encode_request(const BackendRequest& request) {
  json body;
  body["model"] = request.model;
  json messages = json::array();
  for (const Message& message : request.messages) {
    json content = json::array();
    for (const MessagePart& part : message.parts) {
      if (part.kind == MessagePart::Kind::Text) {
        content.push_back({{"type", "text"}, {"text", part.value}});
      } else {
        content.push_back({{"type", "image_ref"}, {"ref", part.value}});
      }
    }
    messages.push_back({{"role", message.role}, {"content", std::move(content)}});
  }
  body["messages"] = std::move(messages);
  body["max_tokens"] = request.max_tokens;
  body["temperature"] = request.temperature;
  return body;
}

bool retryable_status(int status) {
  return status == 429 || (status >= 500 && status < 600);
}

}  // namespace

BackendResponse invoke_backend(const EndpointConfig& endpoint,
                               const BackendRequest& request) {
  if (request.messages.empty()) {
    fail(Errc::InvariantViolation, "backend request must carry at least one message");
  }
  const UrlParts url = split_url(endpoint.url);
  const std::string body = encode_request(request).dump();

  httplib::Headers headers;
  if (!endpoint.api_key_env.empty()) {
    if (const char* key = std::getenv(endpoint.api_key_env.c_str());
        key != nullptr && key[0] != '\0') {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }

  const auto started = std::chrono::steady_clock::now();
  std::string last_failure;
  Errc last_code = Errc::TransportError;

  for (int attempt = 0; attempt <= endpoint.max_retries; ++attempt) {
    if (attempt > 0 && endpoint.retry_backoff_ms > 0) {
      std::this_thread::sleep_for(
          std::chrono::milliseconds(endpoint.retry_backoff_ms));
    }
    httplib::Client client(url.host_port);
    client.set_connection_timeout(0, endpoint.timeout_ms * 1000);
    client.set_read_timeout(endpoint.timeout_ms / 1000,
                            (endpoint.timeout_ms % 1000) * 1000);
    client.set_write_timeout(endpoint.timeout_ms / 1000,
                             (endpoint.timeout_ms % 1000) * 1000);

    httplib::Result result =
        client.Post(url.path, headers, body, "application/json");
    if (!result) {
      const bool timed_out = result.error() == httplib::Error::ConnectionTimeout ||
                             result.error() == httplib::Error::Read;
      last_code = timed_out ? Errc::Timeout : Errc::TransportError;
      last_failure = httplib::to_string(result.error());
      continue;  // transient; retry
    }
    if (result->status < 200 || result->status >= 300) {
      last_code = Errc::RemoteError;
      last_failure = "status " + std::to_string(result->status) + ": " + result->body;
      if (retryable_status(result->status)) continue;
      fail(Errc::RemoteError, last_failure);
    }

    json payload = json::parse(result->body, nullptr, false);
    if (payload.is_discarded() || !payload.is_object() || !payload.contains("text") ||
        !payload["text"].is_string()) {
      fail(Errc::RemoteError, "malformed response body: " + result->body);
    }
    BackendResponse response;
    response.text = payload["text"].get<std::string>();
    if (payload.contains("usage") && payload["usage"].is_object()) {
      response.prompt_tokens = payload["usage"].value("prompt_tokens", 0);
      response.completion_tokens = payload["usage"].value("completion_tokens", 0);
    }
    response.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - started);
    return response;
  }
  fail(last_code, endpoint.url + ": " + last_failure);
}

// ---------------------------------------------------------------------------
// Oracle evaluator

OracleEvaluator::OracleEvaluator(OracleEvaluatorConfig config) : config_(config) {
  if (config_.gamma_min <= 0.0 || config_.gamma_max >= 1.0 ||
      config_.gamma_min > config_.gamma_max) {
    fail(Errc::ConfigError, "oracle gamma range must sit inside (0,1)");
  }
  for (RegionLabel label :
       {RegionLabel::Benign, RegionLabel::Null, RegionLabel::Deceptive}) {
    const double rate = config_.error_rate(label);
    if (rate < 0.0 || rate > 1.0) {
      fail(Errc::ConfigError, "oracle error rates must lie in [0,1]");
    }
  }
}

namespace {

RegionLabel cyclic_wrong_label(RegionLabel truth) {
  // 1 -> 0 -> -1 -> 1
  switch (truth) {
    case RegionLabel::Benign: return RegionLabel::Null;
    case RegionLabel::Null: return RegionLabel::Deceptive;
    case RegionLabel::Deceptive: return RegionLabel::Benign;
  }
  return RegionLabel::Null;
}

}  // namespace

std::string OracleEvaluator::judge_raw(const Sample& sample, ClickPoint click,
                                       std::string_view /*guidance*/) {
  const RegionLabel truth = classify_click(click, sample);
  const std::uint64_t click_tag =
      (static_cast<std::uint64_t>(static_cast<std::uint32_t>(click.x)) << 32) |
      static_cast<std::uint32_t>(click.y);
  SplitMix64 rng(mix_seed(mix_seed(config_.seed, static_cast<std::uint64_t>(sample.id)),
                          click_tag));
  RegionLabel label = truth;
  if (rng.next_double() < config_.error_rate(truth)) {
    label = cyclic_wrong_label(truth);
  }
  const double gamma =
      config_.gamma_min + rng.next_double() * (config_.gamma_max - config_.gamma_min);
  return format_judgment(EvaluatorJudgment{label, gamma});
}

// ---------------------------------------------------------------------------
// Scripted agent

ScriptedPolicy parse_scripted_policy(std::string_view text) {
  if (text == "trap_first") return ScriptedPolicy::TrapFirst;
  if (text == "correct_first") return ScriptedPolicy::CorrectFirst;
  if (text == "null_walk") return ScriptedPolicy::NullWalk;
  fail(Errc::ConfigError, "unknown scripted policy '" + std::string(text) + "'");
}

ScriptedAgent::ScriptedAgent(ScriptedPolicy policy, std::uint64_t seed)
    : policy_(policy), seed_(seed) {}

std::string ScriptedAgent::next_turn(const Sample& sample,
                                     std::span<const std::string> feedback,
                                     std::string_view /*guidance*/) {
  auto click_call = [](ClickPoint p) {
    return "click(" + std::to_string(p.x) + ", " + std::to_string(p.y) + ")";
  };

  switch (policy_) {
    case ScriptedPolicy::TrapFirst:
      if (feedback.empty() && sample.dark_box) {
        return format_action_turn(
            "The large prominent element looks like the fastest way to the goal.",
            click_call(deceptive_click(sample)));
      }
      return format_action_turn("Aiming at the exact control the task names.",
                                click_call(centroid(sample.correct_box)));
    case ScriptedPolicy::CorrectFirst:
      return format_action_turn("The task target is directly visible.",
                                click_call(centroid(sample.correct_box)));
    case ScriptedPolicy::NullWalk: {
      const std::uint64_t turn_seed = mix_seed(
          mix_seed(seed_, static_cast<std::uint64_t>(sample.id)), feedback.size());
      const ClickPoint p = sample_null_clicks(sample, 1, turn_seed).front();
      return format_action_turn("Probing an empty-looking area.", click_call(p));
    }
  }
  fail(Errc::ConfigError, "unreachable scripted policy");
}

// ---------------------------------------------------------------------------
// Summarizer doubles

namespace {

std::string_view section(std::string_view text, std::string_view from,
                         std::string_view until_any_of_a, std::string_view until_b) {
  const std::size_t start = text.find(from);
  if (start == std::string_view::npos) return {};
  const std::size_t body = start + from.size();
  std::size_t end = text.size();
  for (std::string_view marker : {until_any_of_a, until_b}) {
    if (marker.empty()) continue;
    const std::size_t pos = text.find(marker, body);
    if (pos != std::string_view::npos) end = std::min(end, pos);
  }
  return text.substr(body, end - body);
}

std::string trim_copy(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return std::string(s);
}

}  // namespace

std::string RuleSummarizer::summarize(const std::string& input) {
  std::vector<std::string> rules;
  auto add_rule = [&rules](const std::string& rule) {
    if (std::find(rules.begin(), rules.end(), rule) == rules.end()) {
      rules.push_back(rule);
    }
  };

  // Line-anchored terminators: per-case "Task: <instruction>" lines must not
  // end a section, only the bare closing "Task:" header does.
  const std::string guidance = trim_copy(
      section(input, "Current Guidance:\n", "\nNew Failures:", "\nTask:\n"));
  std::istringstream old_lines(guidance);
  for (std::string line; std::getline(old_lines, line);) {
    line = trim_copy(line);
    if (line.rfind("- Case ", 0) == 0) add_rule(line);
  }

  const std::string failures = std::string(
      section(input, "New Failures:\n", "\nAnchor Successes:", "\nTask:\n"));
  std::istringstream lines(failures);
  std::string case_id;
  for (std::string line; std::getline(lines, line);) {
    line = trim_copy(line);
    if (line.rfind("Case ID: ", 0) == 0) {
      case_id = line.substr(std::string_view("Case ID: ").size());
    } else if (const std::size_t pos = line.find("Truth is ");
               pos != std::string::npos && !case_id.empty()) {
      std::string truth = trim_copy(line.substr(pos + std::string_view("Truth is ").size()));
      add_rule("- Case " + case_id + ": judge this click pattern as " + truth + ".");
      case_id.clear();
    }
  }

  std::string out = "Known decision rules:";
  for (const std::string& rule : rules) {
    out += "\n" + rule;
  }
  return out;
}

std::string NoOpSummarizer::summarize(const std::string& input) {
  return trim_copy(
      section(input, "Current Guidance:\n", "\nNew Failures:", "\nTask:\n"));
}

// ---------------------------------------------------------------------------
// Wire-backed clients

namespace {

Message user_message(std::string text, const std::string& image_ref) {
  Message msg;
  msg.role = "user";
  msg.parts.push_back(MessagePart{MessagePart::Kind::Text, std::move(text)});
  if (!image_ref.empty()) {
    msg.parts.push_back(MessagePart{MessagePart::Kind::ImageRef, image_ref});
  }
  return msg;
}

}  // namespace

HttpEvaluator::HttpEvaluator(EndpointConfig endpoint) : endpoint_(std::move(endpoint)) {}

std::string HttpEvaluator::judge_raw(const Sample& sample, ClickPoint click,
                                     std::string_view guidance) {
  BackendRequest request;
  request.model = endpoint_.model;
  request.max_tokens = endpoint_.max_tokens;
  request.temperature = endpoint_.temperature;
  request.messages.push_back(
      user_message(render_evaluator_prompt(sample, click, guidance), sample.image_ref));
  return invoke_backend(endpoint_, request).text;
}

HttpAgent::HttpAgent(EndpointConfig endpoint, std::string tool_list)
    : endpoint_(std::move(endpoint)), tool_list_(std::move(tool_list)) {}

std::string HttpAgent::next_turn(const Sample& sample,
                                 std::span<const std::string> feedback,
                                 std::string_view guidance) {
  BackendRequest request;
  request.model = endpoint_.model;
  request.max_tokens = endpoint_.max_tokens;
  request.temperature = endpoint_.temperature;
  request.messages.push_back(user_message(
      render_agent_prompt(sample.task, tool_list_, guidance), sample.image_ref));
  for (const std::string& observation : feedback) {
    request.messages.push_back(
        user_message("<observation>" + observation + "</observation>", {}));
  }
  return invoke_backend(endpoint_, request).text;
}

HttpSummarizer::HttpSummarizer(EndpointConfig endpoint)
    : endpoint_(std::move(endpoint)) {}

std::string HttpSummarizer::summarize(const std::string& input) {
  BackendRequest request;
  request.model = endpoint_.model;
  request.max_tokens = endpoint_.max_tokens;
  request.temperature = endpoint_.temperature;
  request.messages.push_back(user_message(input, {}));
  return invoke_backend(endpoint_, request).text;
}

}  // namespace clickgate
