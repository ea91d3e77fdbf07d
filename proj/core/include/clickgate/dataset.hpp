#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "clickgate/error.hpp"

namespace clickgate {

/// Axis-aligned box in pixel coordinates, origin top-left, continuous.
/// Membership is closed on all four edges.
struct BoundingBox {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const noexcept { return x2 - x1; }
  double height() const noexcept { return y2 - y1; }
  double area() const noexcept { return width() * height(); }
  bool contains(double x, double y) const noexcept {
    return x >= x1 && x <= x2 && y >= y1 && y <= y2;
  }

  bool operator==(const BoundingBox&) const = default;
};

struct ImageDims {
  int width = 0;
  int height = 0;

  double area() const noexcept {
    return static_cast<double>(width) * static_cast<double>(height);
  }
  double diagonal() const noexcept;

  bool operator==(const ImageDims&) const = default;
};

enum class SampleKind { Normal, Deception };

enum class Scenario { News, Booking, Shopping, Software };

enum class DeceptionCategory { Coercive, Cognitive, ContextualPathSpoofing, Emotional };

std::string_view to_string(SampleKind kind) noexcept;
std::string_view to_string(Scenario scenario) noexcept;
std::string_view to_string(DeceptionCategory category) noexcept;
SampleKind parse_sample_kind(std::string_view text);
Scenario parse_scenario(std::string_view text);
DeceptionCategory parse_deception_category(std::string_view text);

struct Taxonomy {
  Scenario scenario = Scenario::News;
  std::optional<DeceptionCategory> deception_category;

  bool operator==(const Taxonomy&) const = default;
};

/// One benchmark record: a screenshot's geometry plus the task, the correct
/// click box, and (for deception pages) the dark-pattern box.
struct Sample {
  std::int64_t id = 0;
  SampleKind kind = SampleKind::Normal;
  Taxonomy taxonomy;
  ImageDims dims;
  std::string image_ref;  // opaque path; empty for geometric fixtures
  std::string task;
  BoundingBox correct_box;
  std::optional<BoundingBox> dark_box;

  bool operator==(const Sample&) const = default;
};

/// Throws Errc::InvariantViolation when a box is degenerate, negative, or
/// sticks out of the image; Errc::InvariantViolation when kind and dark_box
/// disagree or the task is empty.
void validate_sample(const Sample& sample);

/// Parses one JSON record. Field layout:
///   {"id", "type", "category", "scenario", "image_path",
///    "image_width", "image_height",
///    "correct_box": {"bbox": [x1,y1,x2,y2], "normalized_bbox": [...]},
///    "dark_box": {...}|null, "messages": [{"role","content"}...]}
/// The task text is carried by the first user message (a top-level "task"
/// key is accepted as a fallback). normalized_bbox, when present, is checked
/// against bbox within 1e-6 and rejected on disagreement — it is advisory,
/// never the primary source.
Sample parse_sample(std::string_view record);

/// Canonical one-line JSON for a Sample; parse_sample(serialize_sample(s))
/// reproduces s exactly. Key order is fixed so output is byte-stable.
std::string serialize_sample(const Sample& sample);

std::vector<Sample> load_dataset(const std::filesystem::path& path);
void save_dataset(std::span<const Sample> samples, const std::filesystem::path& path);

/// Id-keyed view over a loaded dataset.
class SampleIndex {
 public:
  SampleIndex() = default;
  explicit SampleIndex(std::span<const Sample> samples);

  const Sample& at(std::int64_t id) const;
  bool contains(std::int64_t id) const noexcept { return by_id_.count(id) != 0; }
  std::size_t size() const noexcept { return by_id_.size(); }

 private:
  std::unordered_map<std::int64_t, Sample> by_id_;
};

/// Coordinates divided by the matching image dimension; all results in [0,1].
BoundingBox normalize_box(const BoundingBox& box, ImageDims dims);
BoundingBox denormalize_box(const BoundingBox& box, ImageDims dims);

struct SplitRatios {
  double train = 0.70;
  double valid = 0.15;
};

struct SplitAssignment {
  std::vector<std::int64_t> train;
  std::vector<std::int64_t> valid;
  std::vector<std::int64_t> test;
};

/// Stratified by kind. Within each stratum, ids are sorted ascending, shuffled
/// with SplitMix64(mix_seed(seed, stratum)), and cut at
/// round-half-up(n*train) / round-half-up(n*valid); the remainder is test.
/// Single-kind datasets form one stratum; Errc::EmptyStratum means there was
/// nothing to split at all.
SplitAssignment stratified_split(std::span<const Sample> samples,
                                 std::uint64_t seed, SplitRatios ratios);

struct BoxStats {
  std::size_t count = 0;
  double mean_area = 0.0;
  double std_area = 0.0;  // population std
  double min_area = 0.0;
  double max_area = 0.0;
  double mean_fraction = 0.0;  // mean over samples of box_area / image_area
};

struct ResolutionStats {
  double mean_width = 0.0;
  double std_width = 0.0;
  double mean_height = 0.0;
  double std_height = 0.0;
};

struct DatasetStats {
  std::size_t normal_count = 0;
  std::size_t deception_count = 0;
  BoxStats correct;
  BoxStats dark;
  ResolutionStats resolution;
};

DatasetStats dataset_stats(std::span<const Sample> samples);

/// Intersection-over-union under the continuous-area convention.
double iou(const BoundingBox& a, const BoundingBox& b);

/// Pixel-free geometric fixtures: n samples with random dims (>= 1024x768)
/// and random non-degenerate boxes. round-half-up(n * deception_fraction)
/// samples carry a dark box placed so a deceptive training click always
/// exists. Deterministic per seed; every output passes validate_sample and
/// the serialize/parse round trip.
std::vector<Sample> generate_synthetic_dataset(std::size_t n, std::uint64_t seed,
                                               double deception_fraction);

/// floor(x + 0.5); the rounding rule used for split and fixture counts.
std::int64_t round_half_up(double x) noexcept;

}  // namespace clickgate
