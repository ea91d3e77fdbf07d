#include "clickgate/reward.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace clickgate {

using ordered_json = nlohmann::ordered_json;

void validate(const RewardConfig& config) {
  if (!(config.alpha_min <= config.alpha_max)) {
    fail(Errc::ConfigError, "alpha_min must be <= alpha_max");
  }
  if (!(config.epsilon > 0.0)) {
    fail(Errc::ConfigError, "epsilon must be positive");
  }
  if (!(config.omega_c4 > 1.0)) {
    fail(Errc::ConfigError, "omega_c4 must exceed 1");
  }
}

std::string_view to_string(ErrorCategory category) noexcept {
  switch (category) {
    case ErrorCategory::Correct: return "Correct";
    case ErrorCategory::C1: return "C1";
    case ErrorCategory::C2: return "C2";
    case ErrorCategory::C3: return "C3";
    case ErrorCategory::C4: return "C4";
    case ErrorCategory::ParseFailure: return "ParseFailure";
    case ErrorCategory::DomainViolation: return "DomainViolation";
  }
  return "Correct";
}

ErrorCategory parse_error_category(std::string_view text) {
  if (text == "Correct") return ErrorCategory::Correct;
  if (text == "C1") return ErrorCategory::C1;
  if (text == "C2") return ErrorCategory::C2;
  if (text == "C3") return ErrorCategory::C3;
  if (text == "C4") return ErrorCategory::C4;
  if (text == "ParseFailure") return ErrorCategory::ParseFailure;
  if (text == "DomainViolation") return ErrorCategory::DomainViolation;
  fail(Errc::MalformedRecord, "unknown error category '" + std::string(text) + "'");
}

double attention_scalar(RegionLabel predicted, const RegionAreas& areas) {
  if (areas.s_image <= 0.0) {
    fail(Errc::InvariantViolation, "image area must be positive");
  }
  return areas.area_of(predicted) / areas.s_image;
}

SeverityResult severity_weight(RegionLabel truth, RegionLabel predicted, double beta,
                               const RewardConfig& config) {
  if (truth == predicted) {
    fail(Errc::NotAnError, "severity_weight requires truth != predicted");
  }
  const double effective_beta = config.use_beta ? beta : 0.0;
  SeverityResult result;
  switch (truth) {
    case RegionLabel::Benign:
      result = SeverityResult{1.0, ErrorCategory::C1};
      break;
    case RegionLabel::Null:
      result = predicted == RegionLabel::Deceptive
                   ? SeverityResult{1.0 + effective_beta, ErrorCategory::C2}
                   : SeverityResult{1.0 + effective_beta, ErrorCategory::C3};
      break;
    case RegionLabel::Deceptive:
      result = predicted == RegionLabel::Benign
                   ? SeverityResult{config.omega_c4, ErrorCategory::C4}
                   : SeverityResult{1.0, ErrorCategory::C1};
      break;
  }
  if (!config.use_severity) {
    result.omega = 1.0;
  }
  return result;
}

double confidence_adjustment(ClickPoint click, RegionLabel truth, RegionLabel predicted,
                             const Sample& sample, const RewardConfig& config) {
  if (truth == predicted) {
    fail(Errc::NotAnError, "confidence_adjustment requires truth != predicted");
  }
  const RegionAreas areas = region_areas(sample);
  const double truth_area = areas.area_of(truth);
  if (truth_area <= 0.0) {
    fail(Errc::NoSuchRegion,
         std::string("truth region ") + std::string(to_string(truth)) +
             " has zero area on sample " + std::to_string(sample.id));
  }
  double distance = boundary_distance(click, sample, predicted);
  if (config.distance_normalizer == DistanceNormalizer::ImageDiagonal) {
    distance /= sample.dims.diagonal();
  }
  const double raw =
      1.0 / ((distance + config.epsilon) * (truth_area / areas.s_image));
  return std::clamp(raw, config.alpha_min, config.alpha_max);
}

RewardOutcome hybrid_reward(const Sample& sample, ClickPoint click,
                            const EvaluatorJudgment& judgment,
                            const RewardConfig& config) {
  const RegionLabel truth = classify_click(click, sample);
  const double gamma = clamp_confidence(judgment.gamma);

  RewardOutcome outcome;
  outcome.gamma = gamma;
  if (judgment.label == truth) {
    outcome.value = gamma;
    outcome.category = ErrorCategory::Correct;
    return outcome;
  }

  const RegionAreas areas = region_areas(sample);
  outcome.beta = attention_scalar(judgment.label, areas);
  const SeverityResult severity =
      severity_weight(truth, judgment.label, outcome.beta, config);
  outcome.omega = severity.omega;
  outcome.category = severity.category;
  outcome.alpha = config.use_alpha ? confidence_adjustment(click, truth, judgment.label,
                                                           sample, config)
                                   : 1.0;
  // Grouped as omega * (alpha * gamma) so the C4/C1 magnitude ratio is exact
  // in floating point for matched (alpha, gamma).
  outcome.value = -(outcome.omega * (outcome.alpha * gamma));
  return outcome;
}

RewardOutcome auxiliary_penalty(ErrorCategory kind, const RewardConfig& config) {
  RewardOutcome outcome;
  outcome.category = kind;
  switch (kind) {
    case ErrorCategory::ParseFailure:
      outcome.value = config.parse_penalty;
      return outcome;
    case ErrorCategory::DomainViolation:
      outcome.value = config.domain_penalty;
      return outcome;
    default:
      fail(Errc::NotAPenalty,
           std::string(to_string(kind)) + " is not an auxiliary penalty category");
  }
}

double clamp_confidence(double gamma) noexcept {
  if (gamma <= 0.0) return 0.001;
  if (gamma >= 1.0) return 0.999;
  return gamma;
}

std::vector<FailureEntry> collect_errors(std::span<const EvaluatedClick> batch) {
  std::vector<FailureEntry> failures;
  for (const EvaluatedClick& item : batch) {
    if (item.outcome.value >= 0.0) continue;
    FailureEntry entry;
    entry.sample_id = item.sample_id;
    entry.click = item.click;
    entry.truth = item.truth;
    if (item.judgment) {
      entry.predicted = item.judgment->label;
      entry.gamma = item.judgment->gamma;
    } else {
      // Parse failures carry no judgment; recorded as a neutral Null
      // prediction with zero confidence.
      entry.predicted = RegionLabel::Null;
      entry.gamma = 0.0;
    }
    entry.kappa = 1;
    failures.push_back(entry);
  }
  return failures;
}

std::string serialize_audit_row(const EvaluatedClick& row) {
  ordered_json rec;
  rec["sample_id"] = row.sample_id;
  rec["x"] = row.click.x;
  rec["y"] = row.click.y;
  rec["truth"] = label_value(row.truth);
  if (row.judgment) {
    rec["predicted"] = label_value(row.judgment->label);
  } else {
    rec["predicted"] = nullptr;
  }
  rec["gamma"] = row.outcome.gamma;
  rec["alpha"] = row.outcome.alpha;
  rec["beta"] = row.outcome.beta;
  rec["omega"] = row.outcome.omega;
  rec["reward"] = row.outcome.value;
  rec["category"] = to_string(row.outcome.category);
  return rec.dump();
}

}  // namespace clickgate
