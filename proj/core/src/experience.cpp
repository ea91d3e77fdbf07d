#include "clickgate/experience.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "clickgate/rng.hpp"

namespace clickgate {

using ordered_json = nlohmann::ordered_json;

std::size_t estimate_tokens(std::string_view text) noexcept {
  std::size_t count = 0;
  bool in_token = false;
  for (char c : text) {
    const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!space && !in_token) ++count;
    in_token = !space;
  }
  return count;
}

ExperienceContext make_context(std::string text, int iteration) {
  ExperienceContext context;
  context.token_estimate = estimate_tokens(text);
  context.text = std::move(text);
  context.iteration = iteration;
  return context;
}

void validate(const LoopConfig& config) {
  if (config.batch_size < 1) fail(Errc::ConfigError, "batch_size must be >= 1");
  if (config.max_iterations < 1) fail(Errc::ConfigError, "max_iterations must be >= 1");
  if (config.patience < 1) fail(Errc::ConfigError, "patience must be >= 1");
}

std::string_view to_string(HaltReason reason) noexcept {
  switch (reason) {
    case HaltReason::None: return "None";
    case HaltReason::Exhausted: return "Exhausted";
    case HaltReason::Budget: return "Budget";
    case HaltReason::Plateau: return "Plateau";
  }
  return "None";
}

namespace {

bool priority_order(const FailureEntry& a, const FailureEntry& b) {
  if (a.kappa != b.kappa) return a.kappa > b.kappa;
  if (a.sample_id != b.sample_id) return a.sample_id < b.sample_id;
  return a.click < b.click;
}

bool stable_identity_order(const FailureEntry& a, const FailureEntry& b) {
  if (a.sample_id != b.sample_id) return a.sample_id < b.sample_id;
  return a.click < b.click;
}

}  // namespace

BatchSelection sample_batches(const PoolState& pools, const LoopConfig& config,
                              std::uint64_t seed) {
  if (pools.failures.empty()) {
    fail(Errc::EmptyFailurePool, "no failures to sample");
  }
  BatchSelection batch;

  batch.failure_batch = pools.failures;
  std::sort(batch.failure_batch.begin(), batch.failure_batch.end(), priority_order);
  if (batch.failure_batch.size() > config.batch_size) {
    batch.failure_batch.resize(config.batch_size);
  }

  if (config.anchor_size > 0 && !pools.successes.empty()) {
    batch.anchor_batch = pools.successes;
    std::sort(batch.anchor_batch.begin(), batch.anchor_batch.end(),
              stable_identity_order);
    SplitMix64 rng(mix_seed(seed, 0xa11c));
    rng.shuffle(batch.anchor_batch);
    if (batch.anchor_batch.size() > config.anchor_size) {
      batch.anchor_batch.resize(config.anchor_size);
    }
  }
  return batch;
}

namespace {

std::vector<FailureEntry>::iterator find_entry(std::vector<FailureEntry>& pool,
                                               const FailureEntry& key) {
  return std::find_if(pool.begin(), pool.end(), [&key](const FailureEntry& e) {
    return e.sample_id == key.sample_id && e.click == key.click;
  });
}

}  // namespace

std::vector<Verdict> validate_batch(const BatchSelection& batch,
                                    EvaluatorClient& evaluator,
                                    const ExperienceContext& context,
                                    PoolState& pools, const SampleIndex& samples) {
  // Judge everything first so a backend fault leaves the pools untouched.
  struct Judged {
    const FailureEntry* entry;
    bool was_anchor;
    bool correct;
    RegionLabel predicted;
    double gamma;
  };
  std::vector<Judged> judged;
  judged.reserve(batch.failure_batch.size() + batch.anchor_batch.size());

  auto judge_one = [&](const FailureEntry& entry, bool was_anchor) {
    const Sample& sample = samples.at(entry.sample_id);
    std::string raw;
    try {
      raw = evaluator.judge_raw(sample, entry.click, context.text);
    } catch (const Error& e) {
      fail(Errc::BackendUnavailable, e.what());
    }
    Parsed<EvaluatorJudgment> parsed = parse_evaluator_output(raw);
    Judged j;
    j.entry = &entry;
    j.was_anchor = was_anchor;
    if (parsed) {
      j.correct = parsed->label == entry.truth;
      j.predicted = parsed->label;
      j.gamma = parsed->gamma;
    } else {
      // An unparseable verdict cannot be trusted; count it as a miss.
      j.correct = false;
      j.predicted = RegionLabel::Null;
      j.gamma = 0.0;
    }
    judged.push_back(j);
  };
  for (const FailureEntry& entry : batch.failure_batch) judge_one(entry, false);
  for (const FailureEntry& entry : batch.anchor_batch) judge_one(entry, true);

  std::vector<Verdict> verdicts;
  verdicts.reserve(judged.size());
  for (const Judged& j : judged) {
    if (!j.was_anchor) {
      auto it = find_entry(pools.failures, *j.entry);
      if (it == pools.failures.end()) {
        fail(Errc::InconsistentInputs, "failure batch entry not found in the pool");
      }
      if (j.correct) {
        FailureEntry moved = *it;
        pools.failures.erase(it);
        pools.successes.push_back(moved);
      } else {
        it->kappa += 1;
        it->predicted = j.predicted;
        it->gamma = j.gamma;
      }
    } else {
      auto it = find_entry(pools.successes, *j.entry);
      if (it == pools.successes.end()) {
        fail(Errc::InconsistentInputs, "anchor batch entry not found in the pool");
      }
      if (!j.correct) {
        // Regressed anchors re-enter the failure pool as fresh failures.
        FailureEntry moved = *it;
        pools.successes.erase(it);
        moved.kappa = 1;
        moved.predicted = j.predicted;
        moved.gamma = j.gamma;
        pools.failures.push_back(moved);
      }
    }
    verdicts.push_back(Verdict{j.entry->sample_id, j.entry->click, j.was_anchor,
                               j.correct, j.predicted});
  }
  return verdicts;
}

ConvergenceDecision check_convergence(std::span<const IterationReport> reports,
                                      const PoolState& pools,
                                      const LoopConfig& config) {
  if (pools.failures.empty()) {
    return ConvergenceDecision{true, HaltReason::Exhausted};
  }
  if (static_cast<int>(reports.size()) >= config.max_iterations) {
    return ConvergenceDecision{true, HaltReason::Budget};
  }
  double best = -1.0;
  int stale = 0;
  for (const IterationReport& report : reports) {
    if (report.pass_rate > best) {
      best = report.pass_rate;
      stale = 0;
    } else {
      ++stale;
    }
  }
  if (stale >= config.patience) {
    return ConvergenceDecision{true, HaltReason::Plateau};
  }
  return ConvergenceDecision{false, HaltReason::None};
}

std::string format_summarizer_input(const ExperienceContext& context,
                                    std::span<const FailureEntry> failures,
                                    std::span<const FailureEntry> anchors,
                                    const SampleIndex& samples, bool include_anchors) {
  std::vector<FailureEntry> ordered(failures.begin(), failures.end());
  std::sort(ordered.begin(), ordered.end(), priority_order);

  std::ostringstream out;
  out << "You are an expert rule synthesizer. Your goal is to update the current "
         "[GUIDANCE] to address new failure cases without breaking existing rules.\n\n";
  out << "Current Guidance:\n" << context.text << "\n\n";
  out << "New Failures:\n";
  for (const FailureEntry& entry : ordered) {
    const Sample& sample = samples.at(entry.sample_id);
    out << "Case ID: " << entry.sample_id << "\n";
    out << "Task: " << sample.task << "\n";
    if (!sample.image_ref.empty()) {
      out << "Screenshot: " << sample.image_ref << "\n";
    }
    out << "Evaluator Mistake: Predicted " << label_value(entry.predicted)
        << " but Truth is " << label_value(entry.truth) << "\n";
    out << "Persistence Count: " << entry.kappa
        << " (Number of times this error has repeated)\n\n";
  }
  if (include_anchors && !anchors.empty()) {
    out << "Anchor Successes:\n";
    for (const FailureEntry& entry : anchors) {
      const Sample& sample = samples.at(entry.sample_id);
      out << "Case ID: " << entry.sample_id << "\n";
      out << "Task: " << sample.task << "\n";
      if (!sample.image_ref.empty()) {
        out << "Screenshot: " << sample.image_ref << "\n";
      }
      out << "Correct Judgment: " << label_value(entry.truth) << "\n\n";
    }
  }
  out << "Task:\nRewrite the [GUIDANCE] to handle these cases. Consolidate similar "
         "failures into abstract principles.\n";
  return out.str();
}

SummarizationResult run_summarization(PoolState& pools, SummarizerClient& summarizer,
                                      EvaluatorClient& evaluator,
                                      const LoopConfig& config, std::uint64_t seed,
                                      const SampleIndex& samples) {
  validate(config);
  SummarizationResult result;
  result.context = make_context("", 0);

  for (;;) {
    const ConvergenceDecision decision =
        check_convergence(result.reports, pools, config);
    if (decision.halt) {
      result.halt_reason = decision.reason;
      break;
    }
    const int iteration = static_cast<int>(result.reports.size()) + 1;
    const BatchSelection batch =
        sample_batches(pools, config, mix_seed(seed, static_cast<std::uint64_t>(iteration)));

    const std::string input = format_summarizer_input(
        result.context, batch.failure_batch, batch.anchor_batch, samples,
        config.anchors_in_summary);
    std::string text = summarizer.summarize(input);
    if (estimate_tokens(text) > config.token_cap) {
      const std::string retry_input =
          input + "\nYour rewrite must stay under " + std::to_string(config.token_cap) +
          " tokens. Shorten it.\n";
      text = summarizer.summarize(retry_input);
      if (estimate_tokens(text) > config.token_cap) {
        fail(Errc::TokenCapExceeded,
             "summarizer output exceeds " + std::to_string(config.token_cap) +
                 " tokens after one retry");
      }
    }
    result.context = make_context(std::move(text), iteration);

    const std::vector<Verdict> verdicts =
        validate_batch(batch, evaluator, result.context, pools, samples);

    IterationReport report;
    report.iteration = iteration;
    for (const FailureEntry& e : batch.failure_batch) {
      report.sampled_failure_ids.push_back(e.sample_id);
    }
    for (const FailureEntry& e : batch.anchor_batch) {
      report.sampled_anchor_ids.push_back(e.sample_id);
    }
    int correct_total = 0;
    for (const Verdict& v : verdicts) {
      if (v.was_anchor) {
        report.regressed += v.correct ? 0 : 1;
      } else {
        report.corrected += v.correct ? 1 : 0;
      }
      correct_total += v.correct ? 1 : 0;
    }
    report.failures_after = pools.failures.size();
    report.successes_after = pools.successes.size();
    report.pass_rate =
        verdicts.empty() ? 0.0
                         : static_cast<double>(correct_total) /
                               static_cast<double>(verdicts.size());
    result.reports.push_back(std::move(report));
  }
  return result;
}

void save_context(const ExperienceContext& context, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) {
    fail(Errc::IoError, "cannot write context file " + path.string());
  }
  out << "# iteration: " << context.iteration << "\n";
  out << "# tokens: " << context.token_estimate << "\n";
  out << "\n";
  out << context.text;
}

ExperienceContext load_context(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    fail(Errc::IoError, "cannot open context file " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string content = buffer.str();

  ExperienceContext context;
  std::size_t pos = 0;
  while (pos < content.size() && content.compare(pos, 2, "# ") == 0) {
    const std::size_t eol = content.find('\n', pos);
    const std::string line =
        content.substr(pos, eol == std::string::npos ? content.size() - pos : eol - pos);
    if (line.rfind("# iteration: ", 0) == 0) {
      context.iteration = std::stoi(line.substr(13));
    }
    if (eol == std::string::npos) {
      pos = content.size();
      break;
    }
    pos = eol + 1;
  }
  if (pos < content.size() && content[pos] == '\n') ++pos;  // blank separator
  context.text = content.substr(pos);
  context.token_estimate = estimate_tokens(context.text);
  return context;
}

std::string serialize_iteration_report(const IterationReport& report) {
  ordered_json rec;
  rec["iteration"] = report.iteration;
  rec["sampled_failure_ids"] = report.sampled_failure_ids;
  rec["sampled_anchor_ids"] = report.sampled_anchor_ids;
  rec["corrected"] = report.corrected;
  rec["regressed"] = report.regressed;
  rec["failures_after"] = report.failures_after;
  rec["successes_after"] = report.successes_after;
  rec["pass_rate"] = report.pass_rate;
  return rec.dump();
}

}  // namespace clickgate
