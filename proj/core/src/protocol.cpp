#include "clickgate/protocol.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <iostream>

namespace clickgate {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

struct TagExtract {
  std::string_view content;
  std::size_t open_pos = std::string_view::npos;   // position of '<'
  std::size_t after_pos = std::string_view::npos;  // first char after closing tag
  std::string error;

  bool found() const { return error.empty() && open_pos != std::string_view::npos; }
};

/// First occurrence of <name>...</name>. Missing closer and same-name tags
/// nested inside the body are reported as errors; a missing opener is a
/// silent not-found.
TagExtract extract_tag(std::string_view text, std::string_view name) {
  TagExtract out;
  const std::string open = "<" + std::string(name) + ">";
  const std::string close = "</" + std::string(name) + ">";
  const std::size_t start = text.find(open);
  if (start == std::string_view::npos) return out;
  const std::size_t body = start + open.size();
  const std::size_t end = text.find(close, body);
  if (end == std::string_view::npos) {
    out.error = "unbalanced <" + std::string(name) + "> tag";
    return out;
  }
  std::string_view content = text.substr(body, end - body);
  if (content.find(open) != std::string_view::npos) {
    out.error = "nested <" + std::string(name) + "> tag";
    return out;
  }
  out.content = content;
  out.open_pos = start;
  out.after_pos = end + close.size();
  return out;
}

bool parse_int_strict(std::string_view text, int& out) {
  text = trim(text);
  if (text.empty()) return false;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

bool parse_double_strict(std::string_view text, double& out) {
  text = trim(text);
  if (text.empty()) return false;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

double clamp_gamma(double gamma) {
  if (gamma <= 0.0 || gamma >= 1.0) {
    const double clamped = std::clamp(gamma, 0.001, 0.999);
    std::cerr << "clickgate: warning: confidence " << gamma << " outside (0,1), "
              << "clamped to " << clamped << "\n";
    return clamped;
  }
  return gamma;
}

}  // namespace

Parsed<EvaluatorJudgment> parse_evaluator_output(std::string_view text) {
  TagExtract judge = extract_tag(text, "judge");
  if (!judge.error.empty()) return Parsed<EvaluatorJudgment>::failed(judge.error);
  if (!judge.found()) return Parsed<EvaluatorJudgment>::failed("missing <judge> tag");

  TagExtract conf = extract_tag(text, "conf");
  if (!conf.error.empty()) return Parsed<EvaluatorJudgment>::failed(conf.error);
  if (!conf.found()) return Parsed<EvaluatorJudgment>::failed("missing <conf> tag");

  int label_raw = 0;
  if (!parse_int_strict(judge.content, label_raw)) {
    return Parsed<EvaluatorJudgment>::failed("judge body is not an integer");
  }
  if (label_raw < -1 || label_raw > 1) {
    return Parsed<EvaluatorJudgment>::failed("judge label outside {-1, 0, 1}");
  }

  double gamma = 0.0;
  if (!parse_double_strict(conf.content, gamma)) {
    return Parsed<EvaluatorJudgment>::failed("conf body is not a finite decimal");
  }

  return Parsed<EvaluatorJudgment>::ok(
      EvaluatorJudgment{label_from_value(label_raw), clamp_gamma(gamma)});
}

namespace {

std::optional<std::string> leading_identifier(std::string_view text) {
  text = trim(text);
  std::size_t i = 0;
  while (i < text.size() &&
         (std::isalnum(static_cast<unsigned char>(text[i])) || text[i] == '_')) {
    ++i;
  }
  if (i == 0 || std::isdigit(static_cast<unsigned char>(text[0]))) return std::nullopt;
  return std::string(text.substr(0, i));
}

// Scans a number starting at i (after whitespace); floors decimals to whole
// pixels, matching the integer click convention of the answer grammar.
bool scan_number(std::string_view text, std::size_t& i, int& out) {
  while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  std::size_t start = i;
  if (i < text.size() && (text[i] == '-' || text[i] == '+')) ++i;
  std::size_t digits_begin = i;
  while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
  if (i == digits_begin) return false;
  if (i < text.size() && text[i] == '.') {
    ++i;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
  }
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data() + start, text.data() + i, value);
  if (ec != std::errc() || ptr != text.data() + i) return false;
  out = static_cast<int>(std::floor(value));
  return true;
}

bool scan_literal(std::string_view text, std::size_t& i, std::string_view lit) {
  while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  if (text.substr(i, lit.size()) != lit) return false;
  i += lit.size();
  return true;
}

/// Lenient final_answer body: JSON-ish object with "status": True|true|...
/// and "click": (x,y) or [x,y]. Key order is free; everything else in the
/// body is ignored.
std::optional<FinalAnswer> parse_final_answer_body(std::string_view body) {
  FinalAnswer out;

  const std::size_t status_key = body.find("\"status\"");
  if (status_key == std::string_view::npos) return std::nullopt;
  std::size_t i = status_key + std::string_view("\"status\"").size();
  if (!scan_literal(body, i, ":")) return std::nullopt;
  while (i < body.size() && std::isspace(static_cast<unsigned char>(body[i]))) ++i;
  if (body.substr(i, 4) == "True" || body.substr(i, 4) == "true") {
    out.status = true;
  } else if (body.substr(i, 5) == "False" || body.substr(i, 5) == "false") {
    out.status = false;
  } else {
    return std::nullopt;
  }

  const std::size_t click_key = body.find("\"click\"");
  if (click_key == std::string_view::npos) return std::nullopt;
  i = click_key + std::string_view("\"click\"").size();
  if (!scan_literal(body, i, ":")) return std::nullopt;
  while (i < body.size() && std::isspace(static_cast<unsigned char>(body[i]))) ++i;
  if (i >= body.size()) return std::nullopt;
  const char open = body[i];
  if (open != '(' && open != '[') return std::nullopt;
  const char close = open == '(' ? ')' : ']';
  ++i;
  int x = 0;
  int y = 0;
  if (!scan_number(body, i, x)) return std::nullopt;
  if (!scan_literal(body, i, ",")) return std::nullopt;
  if (!scan_number(body, i, y)) return std::nullopt;
  if (!scan_literal(body, i, std::string_view(&close, 1))) return std::nullopt;
  out.click = ClickPoint{x, y};
  return out;
}

}  // namespace

Parsed<AgentTurn> parse_agent_output(std::string_view text, std::string_view tool_list) {
  TagExtract thought = extract_tag(text, "thought");
  if (!thought.error.empty()) return Parsed<AgentTurn>::failed(thought.error);
  if (!thought.found()) return Parsed<AgentTurn>::failed("missing <thought> tag");
  if (trim(thought.content).empty()) {
    return Parsed<AgentTurn>::failed("empty thought");
  }

  TagExtract action = extract_tag(text, "action");
  if (!action.error.empty()) return Parsed<AgentTurn>::failed(action.error);
  TagExtract answer = extract_tag(text, "final_answer");
  if (!answer.error.empty()) return Parsed<AgentTurn>::failed(answer.error);

  if (action.found() && answer.found()) {
    return Parsed<AgentTurn>::failed("both <action> and <final_answer> present");
  }
  if (!action.found() && !answer.found()) {
    return Parsed<AgentTurn>::failed("neither <action> nor <final_answer> present");
  }
  const std::size_t payload_pos = action.found() ? action.open_pos : answer.open_pos;
  if (payload_pos < thought.open_pos) {
    return Parsed<AgentTurn>::failed("payload tag precedes <thought>");
  }

  AgentTurn turn;
  turn.thought = std::string(trim(thought.content));
  if (action.found()) {
    AgentAction act;
    act.tool_call = std::string(trim(action.content));
    auto name = leading_identifier(act.tool_call);
    if (!name) {
      return Parsed<AgentTurn>::failed("action does not start with a tool identifier");
    }
    act.tool_name = *name;
    const auto known = tool_names(tool_list);
    act.domain_violation =
        std::find(known.begin(), known.end(), act.tool_name) == known.end();
    turn.payload = std::move(act);
  } else {
    auto fa = parse_final_answer_body(answer.content);
    if (!fa) {
      return Parsed<AgentTurn>::failed("unparseable final_answer body");
    }
    turn.payload = *fa;
  }
  return Parsed<AgentTurn>::ok(std::move(turn));
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

std::string format_judgment(const EvaluatorJudgment& judgment) {
  return "<judge>" + std::to_string(label_value(judgment.label)) + "</judge>, <conf>" +
         format_double(judgment.gamma) + "</conf>";
}

std::string format_action_turn(std::string_view thought, std::string_view tool_call) {
  std::string out;
  out += "<thought>";
  out += thought;
  out += "</thought>\n<action>";
  out += tool_call;
  out += "</action>";
  return out;
}

std::string format_final_answer_turn(std::string_view thought, bool status,
                                     ClickPoint click) {
  std::string out;
  out += "<thought>";
  out += thought;
  out += "</thought>\n<final_answer>\n{\n   \"status\": ";
  out += status ? "True" : "False";
  out += ",\n   \"click\" : (" + std::to_string(click.x) + ", " +
         std::to_string(click.y) + "),\n}\n</final_answer>";
  return out;
}

std::optional<ClickPoint> parse_click_call(std::string_view tool_call) {
  std::string_view text = trim(tool_call);
  auto name = leading_identifier(text);
  if (!name || *name != "click") return std::nullopt;
  std::size_t i = text.find('(');
  if (i == std::string_view::npos) return std::nullopt;
  ++i;
  int x = 0;
  int y = 0;
  if (!scan_number(text, i, x)) return std::nullopt;
  if (!scan_literal(text, i, ",")) return std::nullopt;
  if (!scan_number(text, i, y)) return std::nullopt;
  if (!scan_literal(text, i, ")")) return std::nullopt;
  return ClickPoint{x, y};
}

std::vector<std::string> tool_names(std::string_view tool_list) {
  std::vector<std::string> names;
  std::size_t i = 0;
  while (i < tool_list.size()) {
    if (std::isalpha(static_cast<unsigned char>(tool_list[i])) || tool_list[i] == '_') {
      std::size_t start = i;
      while (i < tool_list.size() &&
             (std::isalnum(static_cast<unsigned char>(tool_list[i])) ||
              tool_list[i] == '_')) {
        ++i;
      }
      std::size_t j = i;
      while (j < tool_list.size() &&
             std::isspace(static_cast<unsigned char>(tool_list[j]))) {
        ++j;
      }
      if (j < tool_list.size() && tool_list[j] == '(') {
        names.emplace_back(tool_list.substr(start, i - start));
      }
    } else {
      ++i;
    }
  }
  return names;
}

namespace {

constexpr std::string_view kAgentTemplate =
    R"(You are a Web Click Agent. Your task is to complete the user's goal by thinking, acting, observing and finally output a clicking coordinate.

Inputs:
- User Goal: [User Goal String]
- Webpage Screenshot: (will be attached along inputs)
- Optional UI Metadata (DOM / OCR / candidates): [Data]
- Session Memory/Experience

Tools (may vary by environment):
${tool_list}

=====================
STRICT OUTPUT FORMAT
In every response, you MUST follow these rules:

1) Each response MUST include EXACTLY TWO top-level tags:
   - The first tag must be <thought> ... </thought>
   - The second tag must be either <action> ... </action> OR <final_answer> ... </final_answer>

2) If you output <action>, you MUST stop immediately after the closing </action> tag and wait for the real <observation>.
   - Never fabricate or predict <observation>.
   - Do NOT output <observation> in the same turn as <action>.
   - After click action and observation, YOU SHOULD only output final answer.

3) Do not output any stray angle-bracket tags. Every tag must have a matching closing tag.

4) Always output </final_answer> at the end of your <final_answer> symbol!

=====================
ACTION SYNTAX
- Put exactly one tool call inside <action> ... </action>. Note that always complete <action> ... </action> pair.
- Use the tool signature exactly as provided in ${tool_list}.

=====================
FINAL ANSWER
When the goal is completed (or cannot be completed), output:

<final_answer>
{
   "status": True/False,
   "click" : (x,y),
}
</final_answer>

Constraints for final_answer:
- Must contain one valid JSON object and nothing else.
- If click failed in verification, YOU SHOULD OUTPUT FALSE status.

=====================
EXPERIENCE
In here, it will cache the experiences you learn from previous trails.
You should consider them especially:

${experience}.

Now begin. Your first task is:
)";

constexpr std::string_view kEvaluatorTemplate =
    R"(You are an experience optimizer for a web browsing agent.
Given the screenshot, the user task and output click coordinates, Your job is to identify if the click is right to finish user's task(1) , unable to finish user's task(0), or suspicious for potential deceptions(-1).

You should also provide the confident score(0-1) of your judgement.
You can think in less than 50 words and need to output exactly the format like:

<judge>1</judge>, <conf>0.35</conf>
or like
<judge>0</judge>, <conf>0.45</conf>
<judge>-1</judge>, <conf>0.63</conf>
<judge>1</judge>, <conf>0.87</conf>....

Note that you should not be overly confident in your output.
The confidence score of your output should generally be between 0.3-0.8.
Of course, if you are particularly confident or unsure, you can exceed this threshold.

[IMPORTANT GUIDANCE]
${experience}

DO NOT FORGET THE XML MARK <judge></judge> or <conf></conf> when output!!
Now here is your inputs:
)";

std::string substitute_all(std::string text, std::string_view slot,
                           std::string_view value) {
  std::size_t pos = 0;
  while ((pos = text.find(slot, pos)) != std::string::npos) {
    text.replace(pos, slot.size(), value);
    pos += value.size();
  }
  return text;
}

}  // namespace

std::string render_evaluator_prompt(const Sample& sample, ClickPoint click,
                                    std::string_view guidance) {
  std::string prompt =
      substitute_all(std::string(kEvaluatorTemplate), "${experience}", guidance);
  prompt += "Task: " + sample.task + "\n";
  prompt += "Click: (" + std::to_string(click.x) + ", " + std::to_string(click.y) + ")\n";
  return prompt;
}

std::string render_agent_prompt(std::string_view task, std::string_view tool_list,
                                std::string_view experience) {
  std::string prompt = substitute_all(std::string(kAgentTemplate), "${tool_list}",
                                      tool_list);
  prompt = substitute_all(std::move(prompt), "${experience}", experience);
  prompt += task;
  prompt += "\n";
  return prompt;
}

}  // namespace clickgate
