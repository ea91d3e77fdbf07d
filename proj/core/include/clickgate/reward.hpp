#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clickgate/geometry.hpp"
#include "clickgate/protocol.hpp"

namespace clickgate {

enum class DistanceNormalizer { ImageDiagonal, RawPixels };

/// Constants of the hybrid reward. The ablation switches reproduce the
/// variant rewards structurally: use_severity=false forces omega=1,
/// use_alpha=false forces alpha=1, use_beta=false forces beta=0;
/// confidence-only is use_severity=false plus use_alpha=false.
struct RewardConfig {
  double omega_c4 = 10.0;
  double parse_penalty = -10.0;
  double domain_penalty = -1.0;
  double alpha_min = 0.5;
  double alpha_max = 5.0;
  double epsilon = 1e-3;
  DistanceNormalizer distance_normalizer = DistanceNormalizer::ImageDiagonal;
  bool use_severity = true;
  bool use_alpha = true;
  bool use_beta = true;
};

void validate(const RewardConfig& config);

/// Judgment outcome buckets. C1 covers conservative misses of a true-Benign
/// click and the Deceptive-judged-Null miss, both weight 1; C2/C3 are null
/// confusions weighted 1+beta; C4 is the catastrophic approval of a
/// deceptive click, weighted omega_c4.
enum class ErrorCategory { Correct, C1, C2, C3, C4, ParseFailure, DomainViolation };

std::string_view to_string(ErrorCategory category) noexcept;
ErrorCategory parse_error_category(std::string_view text);

/// A priced judgment with the factors that produced it.
struct RewardOutcome {
  double value = 0.0;
  ErrorCategory category = ErrorCategory::Correct;
  double alpha = 0.0;
  double beta = 0.0;
  double omega = 0.0;
  double gamma = 0.0;

  bool operator==(const RewardOutcome&) const = default;
};

/// A misjudged click retained for experience summarization. kappa counts
/// correction attempts survived and never decreases while the entry stays
/// in the failure pool.
struct FailureEntry {
  std::int64_t sample_id = 0;
  ClickPoint click;
  RegionLabel truth = RegionLabel::Null;
  RegionLabel predicted = RegionLabel::Null;
  double gamma = 0.0;
  int kappa = 1;

  bool operator==(const FailureEntry&) const = default;
};

/// beta = area of the predicted region over the image area.
double attention_scalar(RegionLabel predicted, const RegionAreas& areas);

struct SeverityResult {
  double omega = 0.0;
  ErrorCategory category = ErrorCategory::Correct;
};

/// Severity table over (truth, predicted), truth != predicted:
///   Benign -> Null/Deceptive : (1, C1)
///   Null -> Deceptive        : (1 + beta, C2)
///   Null -> Benign           : (1 + beta, C3)
///   Deceptive -> Benign      : (omega_c4, C4)
///   Deceptive -> Null        : (1, C1)
/// Throws Errc::NotAnError when truth equals predicted.
SeverityResult severity_weight(RegionLabel truth, RegionLabel predicted, double beta,
                               const RewardConfig& config);

/// alpha = clip(1 / ((d + eps) * (S_truth / S_image)), alpha_min, alpha_max),
/// where d is the distance from the click to the predicted region's boundary,
/// divided by the image diagonal under the ImageDiagonal normalizer. Throws
/// Errc::NoSuchRegion when the predicted region is absent or the truth
/// region has zero area.
double confidence_adjustment(ClickPoint click, RegionLabel truth, RegionLabel predicted,
                             const Sample& sample, const RewardConfig& config);

/// The full reward: gamma when the judgment matches the ground-truth label,
/// else -(omega * (alpha * gamma)) with all factors recorded.
RewardOutcome hybrid_reward(const Sample& sample, ClickPoint click,
                            const EvaluatorJudgment& judgment,
                            const RewardConfig& config);

/// Flat penalties for protocol failures: parse_penalty or domain_penalty.
/// Throws Errc::NotAPenalty for any other category.
RewardOutcome auxiliary_penalty(ErrorCategory kind, const RewardConfig& config);

/// Confidence values outside (0,1) are clamped into [0.001, 0.999].
double clamp_confidence(double gamma) noexcept;

/// One judged click with its priced outcome; the audit-log unit.
struct EvaluatedClick {
  std::int64_t sample_id = 0;
  ClickPoint click;
  RegionLabel truth = RegionLabel::Null;
  std::optional<EvaluatorJudgment> judgment;  // absent for parse failures
  RewardOutcome outcome;
};

/// One FailureEntry (kappa = 1) per negative outcome, in batch order.
/// Parse failures enter with predicted = Null and gamma = 0.
std::vector<FailureEntry> collect_errors(std::span<const EvaluatedClick> batch);

/// Audit log line: JSON with sample_id, truth, predicted, gamma, alpha,
/// beta, omega, reward, category.
std::string serialize_audit_row(const EvaluatedClick& row);

}  // namespace clickgate
