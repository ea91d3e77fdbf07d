#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "clickgate/geometry.hpp"

namespace clickgate {

/// Parsed evaluator verdict: the ternary label plus a confidence score.
/// Confidence is clamped into [0.001, 0.999] at parse time when the raw
/// value falls outside (0, 1); the evaluator prompt only loosely bounds it.
struct EvaluatorJudgment {
  RegionLabel label = RegionLabel::Null;
  double gamma = 0.5;

  bool operator==(const EvaluatorJudgment&) const = default;
};

struct AgentAction {
  std::string tool_call;        // verbatim text inside the action tags
  std::string tool_name;        // identifier before '('
  bool domain_violation = false;  // tool not in the declared tool list

  bool operator==(const AgentAction&) const = default;
};

struct FinalAnswer {
  bool status = false;
  ClickPoint click;

  bool operator==(const FinalAnswer&) const = default;
};

/// One agent response: a thought plus exactly one payload.
struct AgentTurn {
  std::string thought;
  std::variant<AgentAction, FinalAnswer> payload;

  bool is_action() const noexcept { return payload.index() == 0; }
  const AgentAction& action() const { return std::get<AgentAction>(payload); }
  const FinalAnswer& final_answer() const { return std::get<FinalAnswer>(payload); }

  bool operator==(const AgentTurn&) const = default;
};

/// Total parse result: either a value or a diagnostic, never a throw. A
/// failed parse is priced downstream as the parse-failure penalty, so it is
/// an ordinary value here.
template <typename T>
struct Parsed {
  std::optional<T> value;
  std::string error;

  explicit operator bool() const noexcept { return value.has_value(); }
  const T& operator*() const { return *value; }
  const T* operator->() const { return &*value; }

  static Parsed ok(T v) { return Parsed{std::move(v), {}}; }
  static Parsed failed(std::string why) { return Parsed{std::nullopt, std::move(why)}; }
};

/// Extracts the first <judge>..</judge> and <conf>..</conf> pairs. The judge
/// body must be an integer in {-1, 0, 1}; conf must be a decimal number.
/// Trailing prose after the tags is ignored; nested or unbalanced same-name
/// tags are rejected.
Parsed<EvaluatorJudgment> parse_evaluator_output(std::string_view text);

/// Requires a leading <thought> pair followed by exactly one of <action> or
/// <final_answer>. The final_answer body is parsed leniently: True/true and
/// False/false both work, and the click may be a (x,y) tuple or a two-element
/// array. An action naming a tool outside tool_list parses fine but carries
/// the domain-violation marker.
Parsed<AgentTurn> parse_agent_output(std::string_view text, std::string_view tool_list);

/// "<judge>L</judge>, <conf>g</conf>" with the shortest round-trippable
/// confidence formatting; parse_evaluator_output inverts it exactly.
std::string format_judgment(const EvaluatorJudgment& judgment);

std::string format_action_turn(std::string_view thought, std::string_view tool_call);
std::string format_final_answer_turn(std::string_view thought, bool status,
                                     ClickPoint click);

/// Evaluator prompt: the judging instructions, the guidance block, and the
/// closing "Now here is your inputs:" line followed by the task and click.
std::string render_evaluator_prompt(const Sample& sample, ClickPoint click,
                                    std::string_view guidance);

/// Agent prompt with ${tool_list} and ${experience} substituted; ends with
/// "Now begin. Your first task is:" followed by the task text.
std::string render_agent_prompt(std::string_view task, std::string_view tool_list,
                                std::string_view experience);

/// Extracts "click(x, y)" arguments; nullopt when the call is not a
/// well-formed click invocation.
std::optional<ClickPoint> parse_click_call(std::string_view tool_call);

/// Tool names declared in a tool list ("click(x, y), scroll(dy)" -> click,
/// scroll).
std::vector<std::string> tool_names(std::string_view tool_list);

inline constexpr std::string_view kDefaultToolList = "click(x, y)";

/// Shortest decimal text that parses back to exactly this double.
std::string format_double(double value);

}  // namespace clickgate
