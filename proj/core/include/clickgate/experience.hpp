#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clickgate/backends.hpp"
#include "clickgate/reward.hpp"

namespace clickgate {

/// Distilled guidance injected into the evaluator prompt. token_estimate is
/// the whitespace-token count of text, the approximation used against the
/// loop's token cap.
struct ExperienceContext {
  std::string text;
  int iteration = 0;
  std::size_t token_estimate = 0;

  bool operator==(const ExperienceContext&) const = default;
};

std::size_t estimate_tokens(std::string_view text) noexcept;
ExperienceContext make_context(std::string text, int iteration);

/// Failure pool F and success pool S. An entry lives in exactly one pool;
/// entries move between pools but are never duplicated or dropped, so
/// |F| + |S| is invariant across the loop.
struct PoolState {
  std::vector<FailureEntry> failures;
  std::vector<FailureEntry> successes;

  std::size_t total() const noexcept { return failures.size() + successes.size(); }
};

struct LoopConfig {
  std::size_t batch_size = 8;    // failure entries per iteration (b)
  std::size_t anchor_size = 4;   // success anchors per iteration (a)
  int max_iterations = 20;       // T
  int patience = 3;              // plateau window
  std::size_t token_cap = 400;
  bool anchors_in_summary = true;
};

void validate(const LoopConfig& config);

struct BatchSelection {
  std::vector<FailureEntry> failure_batch;  // kappa desc, sample id asc
  std::vector<FailureEntry> anchor_batch;   // uniform without replacement
};

/// Throws Errc::EmptyFailurePool when no failures remain.
BatchSelection sample_batches(const PoolState& pools, const LoopConfig& config,
                              std::uint64_t seed);

struct Verdict {
  std::int64_t sample_id = 0;
  ClickPoint click;
  bool was_anchor = false;
  bool correct = false;
  RegionLabel predicted = RegionLabel::Null;
};

/// Re-judges every batch entry under the given context. Corrected failures
/// move to S keeping their kappa; failures that persist get kappa + 1;
/// anchors that regress re-enter F as fresh failures with kappa = 1. An
/// unparseable evaluator reply counts as a misjudgment. Pools are updated
/// in place; throws Errc::BackendUnavailable with pools untouched when the
/// evaluator cannot be reached.
std::vector<Verdict> validate_batch(const BatchSelection& batch,
                                    EvaluatorClient& evaluator,
                                    const ExperienceContext& context,
                                    PoolState& pools, const SampleIndex& samples);

struct IterationReport {
  int iteration = 0;
  std::vector<std::int64_t> sampled_failure_ids;
  std::vector<std::int64_t> sampled_anchor_ids;
  int corrected = 0;   // failure-batch entries fixed
  int regressed = 0;   // anchor entries broken
  std::size_t failures_after = 0;
  std::size_t successes_after = 0;
  double pass_rate = 0.0;  // correct fraction over the combined batch
};

enum class HaltReason { None, Exhausted, Budget, Plateau };

std::string_view to_string(HaltReason reason) noexcept;

struct ConvergenceDecision {
  bool halt = false;
  HaltReason reason = HaltReason::None;
};

/// Halts when F is empty (Exhausted), the iteration budget is spent
/// (Budget), or the pass rate has not strictly improved on the best seen for
/// `patience` consecutive iterations (Plateau).
ConvergenceDecision check_convergence(std::span<const IterationReport> reports,
                                      const PoolState& pools, const LoopConfig& config);

/// Renders the summarizer input: the rewrite preamble, the current guidance,
/// one case block per failure (kappa-descending), optional anchor blocks,
/// and the closing rewrite instruction. Image refs appear as opaque
/// attachment lines when a sample carries one.
std::string format_summarizer_input(const ExperienceContext& context,
                                    std::span<const FailureEntry> failures,
                                    std::span<const FailureEntry> anchors,
                                    const SampleIndex& samples, bool include_anchors);

struct SummarizationResult {
  ExperienceContext context;
  std::vector<IterationReport> reports;
  HaltReason halt_reason = HaltReason::None;
};

/// The full loop: sample batches, summarize, validate, repeat until
/// convergence. Starts from the empty context; returns immediately when the
/// failure pool starts empty. A summarizer reply over the token cap is
/// retried once, then raises Errc::TokenCapExceeded.
SummarizationResult run_summarization(PoolState& pools, SummarizerClient& summarizer,
                                      EvaluatorClient& evaluator,
                                      const LoopConfig& config, std::uint64_t seed,
                                      const SampleIndex& samples);

/// Context file: "# iteration:" / "# tokens:" header lines, a blank line,
/// then exactly the text injected into the prompt's guidance slot.
void save_context(const ExperienceContext& context, const std::filesystem::path& path);
ExperienceContext load_context(const std::filesystem::path& path);

std::string serialize_iteration_report(const IterationReport& report);

}  // namespace clickgate
