#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "clickgate/dataset.hpp"

namespace clickgate {

/// Integer pixel click, origin top-left. Valid when 0 <= x < width and
/// 0 <= y < height of the associated image.
struct ClickPoint {
  int x = 0;
  int y = 0;

  auto operator<=>(const ClickPoint&) const = default;
};

/// Ternary region judgment: which annotated region a click falls in
/// (ground truth) or is judged to fall in (evaluator prediction).
enum class RegionLabel : int {
  Deceptive = -1,
  Null = 0,
  Benign = 1,
};

constexpr int label_value(RegionLabel label) noexcept {
  return static_cast<int>(label);
}

/// Throws Errc::InvariantViolation for anything outside {-1, 0, 1}.
RegionLabel label_from_value(int value);

std::string_view to_string(RegionLabel label) noexcept;

/// Exact region areas in px^2. s_null is the true area of the image minus
/// the union of the two boxes, so s_correct + s_deceptive + s_null - s_overlap
/// equals s_image identically.
struct RegionAreas {
  double s_image = 0.0;
  double s_correct = 0.0;
  double s_deceptive = 0.0;
  double s_null = 0.0;
  double s_overlap = 0.0;  // area of correct ∩ dark

  double area_of(RegionLabel label) const noexcept {
    switch (label) {
      case RegionLabel::Benign: return s_correct;
      case RegionLabel::Deceptive: return s_deceptive;
      case RegionLabel::Null: return s_null;
    }
    return 0.0;
  }
};

enum class ClickOrigin { CentroidBenign, CentroidDeceptive, RandomNull };

std::string_view to_string(ClickOrigin origin) noexcept;
ClickOrigin parse_click_origin(std::string_view text);

/// A synthesized supervision click with its ground-truth label.
struct TrainingClick {
  std::int64_t sample_id = 0;
  ClickPoint click;
  RegionLabel label = RegionLabel::Null;
  ClickOrigin origin = ClickOrigin::RandomNull;

  bool operator==(const TrainingClick&) const = default;
};

/// Ground-truth label rule: Benign if the click is inside the correct box
/// (edges inclusive), else Deceptive if inside the dark box, else Null.
/// The correct box is checked first, so it wins where the boxes overlap.
/// Throws Errc::OutOfImage for clicks outside the image.
RegionLabel classify_click(ClickPoint click, const Sample& sample);

/// ((x1+x2)/2, (y1+y2)/2), floored to whole pixels.
ClickPoint centroid(const BoundingBox& box);

/// The dark box centroid, unless that point lies inside the correct box, in
/// which case the click is pushed to (x2-1, y2-1) of the dark box. Throws
/// Errc::NoDarkBox on Normal samples and Errc::UnresolvableOverlap when even
/// the adjusted point classifies as Benign.
ClickPoint deceptive_click(const Sample& sample);

/// Consecutive rejections tolerated before giving up on the null region.
inline constexpr int kNullSamplingMaxAttempts = 10000;

/// n clicks drawn uniformly over the image, accepted only when they classify
/// as Null. Deterministic per seed. Throws Errc::NullRegionExhausted after
/// kNullSamplingMaxAttempts consecutive rejections.
std::vector<ClickPoint> sample_null_clicks(const Sample& sample, std::size_t n,
                                           std::uint64_t seed);

/// One centroid click on the correct box, one deceptive click when a dark box
/// exists, and n_null random null clicks. Every emitted label is re-checked
/// against classify_click before returning.
std::vector<TrainingClick> generate_training_clicks(const Sample& sample,
                                                    std::size_t n_null,
                                                    std::uint64_t seed);

RegionAreas region_areas(const Sample& sample);

/// Euclidean distance (pixels) from the click to the nearest boundary of the
/// target region: the correct box for Benign, the dark box for Deceptive, and
/// the outline of correct ∪ dark for Null. The image border never counts as a
/// Null boundary. Zero when the click lies on the boundary. Throws
/// Errc::NoSuchRegion when the target region does not exist on this sample.
double boundary_distance(ClickPoint click, const Sample& sample, RegionLabel target);

/// Line format shared with the CLI: one JSON object per click.
std::string serialize_training_click(const TrainingClick& click);
TrainingClick parse_training_click(std::string_view line);

}  // namespace clickgate
