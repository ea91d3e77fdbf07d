#pragma once

#include <chrono>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clickgate/protocol.hpp"

namespace clickgate {

struct MessagePart {
  enum class Kind { Text, ImageRef };
  Kind kind = Kind::Text;
  std::string value;
};

struct Message {
  std::string role;
  std::vector<MessagePart> parts;
};

struct BackendRequest {
  std::string model;
  std::vector<Message> messages;
  int max_tokens = 512;
  double temperature = 0.0;
};

struct BackendResponse {
  std::string text;
  std::chrono::milliseconds latency{0};
  int prompt_tokens = 0;
  int completion_tokens = 0;
};

struct EndpointConfig {
  std::string url;           // http://host:port/path
  std::string model;
  std::string api_key_env;   // name of the env var holding the bearer token
  int timeout_ms = 30000;
  int max_retries = 2;       // extra attempts on transient failures
  int retry_backoff_ms = 100;
  int max_tokens = 512;
  double temperature = 0.0;  // evaluation runs decode greedily
};

/// POSTs {model, messages:[{role, content:[{type:"text",text}|
/// {type:"image_ref",ref}]}], max_tokens, temperature} and expects
/// {text, usage:{prompt_tokens, completion_tokens}}. Retries transient
/// failures (transport errors, 429, 5xx) per config. Throws Errc::Timeout,
/// Errc::TransportError, or Errc::RemoteError with the body preserved.
BackendResponse invoke_backend(const EndpointConfig& endpoint,
                               const BackendRequest& request);

/// Judges one proposed click. Returns raw text in the judge/conf grammar;
/// callers parse it with parse_evaluator_output.
class EvaluatorClient {
 public:
  virtual ~EvaluatorClient() = default;
  virtual std::string judge_raw(const Sample& sample, ClickPoint click,
                                std::string_view guidance) = 0;
};

/// Produces one agent turn in the thought/action/final_answer grammar.
/// feedback holds the observation strings from earlier rejected or executed
/// turns, oldest first.
class AgentClient {
 public:
  virtual ~AgentClient() = default;
  virtual std::string next_turn(const Sample& sample,
                                std::span<const std::string> feedback,
                                std::string_view guidance) = 0;
};

class SummarizerClient {
 public:
  virtual ~SummarizerClient() = default;
  virtual std::string summarize(const std::string& input) = 0;
};

/// Ground-truth-aware test double. Per-call randomness is derived from
/// (seed, sample id, click), so judgments are reproducible regardless of
/// call order or parallelism. A wrong label, when injected, is the cyclic
/// shift 1 -> 0 -> -1 -> 1.
struct OracleEvaluatorConfig {
  double error_rate_benign = 0.0;
  double error_rate_null = 0.0;
  double error_rate_deceptive = 0.0;
  double gamma_min = 0.3;
  double gamma_max = 0.8;
  std::uint64_t seed = 0;

  double error_rate(RegionLabel truth) const noexcept {
    switch (truth) {
      case RegionLabel::Benign: return error_rate_benign;
      case RegionLabel::Null: return error_rate_null;
      case RegionLabel::Deceptive: return error_rate_deceptive;
    }
    return 0.0;
  }
};

class OracleEvaluator : public EvaluatorClient {
 public:
  explicit OracleEvaluator(OracleEvaluatorConfig config);
  std::string judge_raw(const Sample& sample, ClickPoint click,
                        std::string_view guidance) override;

 private:
  OracleEvaluatorConfig config_;
};

/// Deterministic agent doubles.
///   TrapFirst:    deceptive click first, then the correct centroid after a
///                 rejection (falls back to the centroid on Normal samples).
///   CorrectFirst: the correct centroid immediately.
///   NullWalk:     a fresh null-region point every turn, forever.
enum class ScriptedPolicy { TrapFirst, CorrectFirst, NullWalk };

ScriptedPolicy parse_scripted_policy(std::string_view text);

class ScriptedAgent : public AgentClient {
 public:
  explicit ScriptedAgent(ScriptedPolicy policy, std::uint64_t seed = 0);
  std::string next_turn(const Sample& sample, std::span<const std::string> feedback,
                        std::string_view guidance) override;

 private:
  ScriptedPolicy policy_;
  std::uint64_t seed_;
};

/// Deterministic summarizer double: distills the case blocks it receives
/// into one per-case rule line, merged with the rule lines already present
/// in the current guidance.
class RuleSummarizer : public SummarizerClient {
 public:
  std::string summarize(const std::string& input) override;
};

/// Returns the current guidance unchanged — never makes progress.
class NoOpSummarizer : public SummarizerClient {
 public:
  std::string summarize(const std::string& input) override;
};

/// Wire-backed clients; each call renders the prompt, invokes the endpoint,
/// and returns the raw completion text.
class HttpEvaluator : public EvaluatorClient {
 public:
  explicit HttpEvaluator(EndpointConfig endpoint);
  std::string judge_raw(const Sample& sample, ClickPoint click,
                        std::string_view guidance) override;

 private:
  EndpointConfig endpoint_;
};

class HttpAgent : public AgentClient {
 public:
  HttpAgent(EndpointConfig endpoint, std::string tool_list);
  std::string next_turn(const Sample& sample, std::span<const std::string> feedback,
                        std::string_view guidance) override;

 private:
  EndpointConfig endpoint_;
  std::string tool_list_;
};

class HttpSummarizer : public SummarizerClient {
 public:
  explicit HttpSummarizer(EndpointConfig endpoint);
  std::string summarize(const std::string& input) override;

 private:
  EndpointConfig endpoint_;
};

}  // namespace clickgate
