#include "clickgate/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "clickgate/rng.hpp"

namespace clickgate {

using ordered_json = nlohmann::ordered_json;

double ImageDims::diagonal() const noexcept {
  return std::hypot(static_cast<double>(width), static_cast<double>(height));
}

std::string_view to_string(SampleKind kind) noexcept {
  return kind == SampleKind::Normal ? "Normal" : "Deception";
}

std::string_view to_string(Scenario scenario) noexcept {
  switch (scenario) {
    case Scenario::News: return "News";
    case Scenario::Booking: return "Booking";
    case Scenario::Shopping: return "Shopping";
    case Scenario::Software: return "Software";
  }
  return "News";
}

std::string_view to_string(DeceptionCategory category) noexcept {
  switch (category) {
    case DeceptionCategory::Coercive: return "Coercive";
    case DeceptionCategory::Cognitive: return "Cognitive";
    case DeceptionCategory::ContextualPathSpoofing: return "ContextualPathSpoofing";
    case DeceptionCategory::Emotional: return "Emotional";
  }
  return "Coercive";
}

SampleKind parse_sample_kind(std::string_view text) {
  if (text == "Normal") return SampleKind::Normal;
  if (text == "Deception") return SampleKind::Deception;
  fail(Errc::MalformedRecord, "unknown sample type '" + std::string(text) + "'");
}

Scenario parse_scenario(std::string_view text) {
  if (text == "News") return Scenario::News;
  if (text == "Booking") return Scenario::Booking;
  if (text == "Shopping") return Scenario::Shopping;
  if (text == "Software") return Scenario::Software;
  fail(Errc::MalformedRecord, "unknown scenario '" + std::string(text) + "'");
}

DeceptionCategory parse_deception_category(std::string_view text) {
  if (text == "Coercive") return DeceptionCategory::Coercive;
  if (text == "Cognitive") return DeceptionCategory::Cognitive;
  if (text == "ContextualPathSpoofing") return DeceptionCategory::ContextualPathSpoofing;
  if (text == "Emotional") return DeceptionCategory::Emotional;
  fail(Errc::MalformedRecord, "unknown deception category '" + std::string(text) + "'");
}

std::int64_t round_half_up(double x) noexcept {
  return static_cast<std::int64_t>(std::floor(x + 0.5));
}

namespace {

void validate_box_in_image(const BoundingBox& box, const ImageDims& dims,
                           const char* role) {
  if (!(box.x1 < box.x2) || !(box.y1 < box.y2)) {
    fail(Errc::InvariantViolation,
         std::string(role) + " box is degenerate (requires x1 < x2 and y1 < y2)");
  }
  if (box.x1 < 0.0 || box.y1 < 0.0) {
    fail(Errc::InvariantViolation, std::string(role) + " box has negative coordinates");
  }
  if (box.x2 > dims.width || box.y2 > dims.height) {
    fail(Errc::InvariantViolation, std::string(role) + " box exceeds image bounds");
  }
}

}  // namespace

void validate_sample(const Sample& sample) {
  if (sample.dims.width < 1 || sample.dims.height < 1) {
    fail(Errc::InvariantViolation, "image dims must be >= 1x1");
  }
  if (sample.task.empty()) {
    fail(Errc::InvariantViolation, "task text must be non-empty");
  }
  validate_box_in_image(sample.correct_box, sample.dims, "correct");
  if (sample.kind == SampleKind::Deception) {
    if (!sample.dark_box) {
      fail(Errc::InvariantViolation, "Deception sample without dark_box");
    }
    validate_box_in_image(*sample.dark_box, sample.dims, "dark");
    if (!sample.taxonomy.deception_category) {
      fail(Errc::InvariantViolation, "Deception sample without deception category");
    }
  } else {
    if (sample.dark_box) {
      fail(Errc::InvariantViolation, "Normal sample carries a dark_box");
    }
    if (sample.taxonomy.deception_category) {
      fail(Errc::InvariantViolation, "Normal sample carries a deception category");
    }
  }
}

namespace {

BoundingBox box_from_json(const ordered_json& arr, const char* role) {
  if (!arr.is_array() || arr.size() != 4) {
    fail(Errc::MalformedRecord, std::string(role) + " bbox must be a 4-element array");
  }
  for (const auto& v : arr) {
    if (!v.is_number()) {
      fail(Errc::MalformedRecord, std::string(role) + " bbox holds a non-number");
    }
  }
  return BoundingBox{arr[0].get<double>(), arr[1].get<double>(),
                     arr[2].get<double>(), arr[3].get<double>()};
}

void check_normalized_agreement(const ordered_json& node, const BoundingBox& box,
                                const ImageDims& dims, const char* role) {
  if (!node.contains("normalized_bbox") || node["normalized_bbox"].is_null()) return;
  BoundingBox given = box_from_json(node["normalized_bbox"], role);
  BoundingBox expect = normalize_box(box, dims);
  const double tol = 1e-6;
  if (std::abs(given.x1 - expect.x1) > tol || std::abs(given.y1 - expect.y1) > tol ||
      std::abs(given.x2 - expect.x2) > tol || std::abs(given.y2 - expect.y2) > tol) {
    fail(Errc::InvariantViolation,
         std::string(role) + " normalized_bbox disagrees with bbox/dims");
  }
}

std::string task_from_messages(const ordered_json& rec) {
  if (rec.contains("messages") && rec["messages"].is_array()) {
    for (const auto& msg : rec["messages"]) {
      if (!msg.is_object() || msg.value("role", "") != "user") continue;
      const auto& content = msg.contains("content") ? msg["content"] : ordered_json();
      if (content.is_string()) return content.get<std::string>();
      if (content.is_array()) {
        for (const auto& part : content) {
          if (part.is_object() && part.value("type", "") == "text") {
            return part.value("text", "");
          }
        }
      }
    }
  }
  if (rec.contains("task") && rec["task"].is_string()) {
    return rec["task"].get<std::string>();
  }
  return {};
}

}  // namespace

Sample parse_sample(std::string_view record) {
  ordered_json rec = ordered_json::parse(record, nullptr, false);
  if (rec.is_discarded() || !rec.is_object()) {
    fail(Errc::MalformedRecord, "record is not a JSON object");
  }

  Sample sample;
  try {
    if (!rec.contains("id") || !rec["id"].is_number_integer()) {
      fail(Errc::MalformedRecord, "missing integer 'id'");
    }
    sample.id = rec["id"].get<std::int64_t>();
    sample.kind = parse_sample_kind(rec.value("type", ""));
    if (!rec.contains("scenario") || !rec["scenario"].is_string()) {
      fail(Errc::MalformedRecord, "missing 'scenario'");
    }
    sample.taxonomy.scenario = parse_scenario(rec["scenario"].get<std::string>());
    if (rec.contains("category") && !rec["category"].is_null()) {
      if (!rec["category"].is_string()) {
        fail(Errc::MalformedRecord, "'category' must be a string or null");
      }
      sample.taxonomy.deception_category =
          parse_deception_category(rec["category"].get<std::string>());
    }
    if (rec.contains("image_path") && rec["image_path"].is_string()) {
      sample.image_ref = rec["image_path"].get<std::string>();
    }
    if (!rec.contains("image_width") || !rec["image_width"].is_number_integer() ||
        !rec.contains("image_height") || !rec["image_height"].is_number_integer()) {
      fail(Errc::MalformedRecord, "missing integer image_width/image_height");
    }
    sample.dims = ImageDims{rec["image_width"].get<int>(), rec["image_height"].get<int>()};

    if (!rec.contains("correct_box") || !rec["correct_box"].is_object() ||
        !rec["correct_box"].contains("bbox")) {
      fail(Errc::MalformedRecord, "missing correct_box.bbox");
    }
    sample.correct_box = box_from_json(rec["correct_box"]["bbox"], "correct");
    check_normalized_agreement(rec["correct_box"], sample.correct_box, sample.dims,
                               "correct");

    if (rec.contains("dark_box") && !rec["dark_box"].is_null()) {
      if (!rec["dark_box"].is_object() || !rec["dark_box"].contains("bbox")) {
        fail(Errc::MalformedRecord, "dark_box must be null or an object with bbox");
      }
      sample.dark_box = box_from_json(rec["dark_box"]["bbox"], "dark");
      check_normalized_agreement(rec["dark_box"], *sample.dark_box, sample.dims, "dark");
    }

    sample.task = task_from_messages(rec);
    if (sample.task.empty()) {
      fail(Errc::MalformedRecord, "no task text in messages or 'task'");
    }
  } catch (const ordered_json::exception& e) {
    fail(Errc::MalformedRecord, e.what());
  }

  validate_sample(sample);
  return sample;
}

namespace {

ordered_json box_to_json(const BoundingBox& box, const ImageDims& dims) {
  BoundingBox norm = normalize_box(box, dims);
  ordered_json node;
  node["bbox"] = {box.x1, box.y1, box.x2, box.y2};
  node["normalized_bbox"] = {norm.x1, norm.y1, norm.x2, norm.y2};
  return node;
}

}  // namespace

std::string serialize_sample(const Sample& sample) {
  ordered_json rec;
  rec["id"] = sample.id;
  rec["type"] = to_string(sample.kind);
  if (sample.taxonomy.deception_category) {
    rec["category"] = to_string(*sample.taxonomy.deception_category);
  } else {
    rec["category"] = nullptr;
  }
  rec["scenario"] = to_string(sample.taxonomy.scenario);
  if (sample.image_ref.empty()) {
    rec["image_path"] = nullptr;
  } else {
    rec["image_path"] = sample.image_ref;
  }
  rec["image_width"] = sample.dims.width;
  rec["image_height"] = sample.dims.height;
  rec["correct_box"] = box_to_json(sample.correct_box, sample.dims);
  if (sample.dark_box) {
    rec["dark_box"] = box_to_json(*sample.dark_box, sample.dims);
  } else {
    rec["dark_box"] = nullptr;
  }
  rec["messages"] = ordered_json::array(
      {ordered_json{{"role", "user"}, {"content", sample.task}}});
  return rec.dump();
}

std::vector<Sample> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    fail(Errc::IoError, "cannot open dataset file " + path.string());
  }
  std::vector<Sample> samples;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      samples.push_back(parse_sample(line));
    } catch (const Error& e) {
      fail(e.code(), path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return samples;
}

void save_dataset(std::span<const Sample> samples, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    fail(Errc::IoError, "cannot write dataset file " + path.string());
  }
  for (const Sample& sample : samples) {
    out << serialize_sample(sample) << '\n';
  }
}

SampleIndex::SampleIndex(std::span<const Sample> samples) {
  by_id_.reserve(samples.size());
  for (const Sample& sample : samples) {
    by_id_.emplace(sample.id, sample);
  }
}

const Sample& SampleIndex::at(std::int64_t id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) {
    fail(Errc::InconsistentInputs, "unknown sample id " + std::to_string(id));
  }
  return it->second;
}

BoundingBox normalize_box(const BoundingBox& box, ImageDims dims) {
  return BoundingBox{box.x1 / dims.width, box.y1 / dims.height,
                     box.x2 / dims.width, box.y2 / dims.height};
}

BoundingBox denormalize_box(const BoundingBox& box, ImageDims dims) {
  return BoundingBox{box.x1 * dims.width, box.y1 * dims.height,
                     box.x2 * dims.width, box.y2 * dims.height};
}

SplitAssignment stratified_split(std::span<const Sample> samples, std::uint64_t seed,
                                 SplitRatios ratios) {
  if (!(ratios.train > 0.0) || !(ratios.valid > 0.0) ||
      !(ratios.train + ratios.valid < 1.0)) {
    fail(Errc::ConfigError, "split ratios must be positive with train+valid < 1");
  }

  std::vector<std::int64_t> strata[2];
  for (const Sample& sample : samples) {
    strata[sample.kind == SampleKind::Deception ? 1 : 0].push_back(sample.id);
  }
  if (strata[0].empty() && strata[1].empty()) {
    fail(Errc::EmptyStratum, "no samples to split");
  }

  SplitAssignment out;
  for (std::size_t s = 0; s < 2; ++s) {
    auto& ids = strata[s];
    if (ids.empty()) continue;  // a dataset may hold a single kind
    std::sort(ids.begin(), ids.end());
    SplitMix64 rng(mix_seed(seed, s));
    rng.shuffle(ids);

    const auto n = static_cast<double>(ids.size());
    std::size_t n_train = static_cast<std::size_t>(round_half_up(n * ratios.train));
    std::size_t n_valid = static_cast<std::size_t>(round_half_up(n * ratios.valid));
    n_train = std::min(n_train, ids.size());
    n_valid = std::min(n_valid, ids.size() - n_train);

    out.train.insert(out.train.end(), ids.begin(), ids.begin() + n_train);
    out.valid.insert(out.valid.end(), ids.begin() + n_train,
                     ids.begin() + n_train + n_valid);
    out.test.insert(out.test.end(), ids.begin() + n_train + n_valid, ids.end());
  }
  return out;
}

namespace {

struct Accumulator {
  std::size_t count = 0;
  double sum = 0.0;
  double sum_sq = 0.0;
  double min = std::numeric_limits<double>::infinity();
  double max = -std::numeric_limits<double>::infinity();

  void add(double v) {
    ++count;
    sum += v;
    sum_sq += v * v;
    min = std::min(min, v);
    max = std::max(max, v);
  }
  double mean() const { return count ? sum / static_cast<double>(count) : 0.0; }
  double pop_std() const {
    if (count == 0) return 0.0;
    double m = mean();
    double var = sum_sq / static_cast<double>(count) - m * m;
    return var > 0.0 ? std::sqrt(var) : 0.0;
  }
};

}  // namespace

DatasetStats dataset_stats(std::span<const Sample> samples) {
  if (samples.empty()) {
    fail(Errc::EmptyDataset, "dataset_stats over zero samples");
  }
  DatasetStats stats;
  Accumulator correct_area, dark_area, correct_frac, dark_frac, width, height;
  for (const Sample& sample : samples) {
    if (sample.kind == SampleKind::Deception) {
      ++stats.deception_count;
    } else {
      ++stats.normal_count;
    }
    const double image_area = sample.dims.area();
    correct_area.add(sample.correct_box.area());
    correct_frac.add(sample.correct_box.area() / image_area);
    if (sample.dark_box) {
      dark_area.add(sample.dark_box->area());
      dark_frac.add(sample.dark_box->area() / image_area);
    }
    width.add(sample.dims.width);
    height.add(sample.dims.height);
  }

  auto to_box_stats = [](const Accumulator& area, const Accumulator& frac) {
    BoxStats bs;
    bs.count = area.count;
    if (area.count == 0) return bs;
    bs.mean_area = area.mean();
    bs.std_area = area.pop_std();
    bs.min_area = area.min;
    bs.max_area = area.max;
    bs.mean_fraction = frac.mean();
    return bs;
  };
  stats.correct = to_box_stats(correct_area, correct_frac);
  stats.dark = to_box_stats(dark_area, dark_frac);
  stats.resolution = ResolutionStats{width.mean(), width.pop_std(),
                                     height.mean(), height.pop_std()};
  return stats;
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double ix = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  const double iy = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

namespace {

BoundingBox random_box(SplitMix64& rng, const ImageDims& dims) {
  // Side lengths span small buttons up to banner-sized regions.
  const double w = 16.0 + rng.next_double() * (dims.width * 0.4 - 16.0);
  const double h = 12.0 + rng.next_double() * (dims.height * 0.3 - 12.0);
  const double x1 = std::floor(rng.next_double() * (dims.width - w));
  const double y1 = std::floor(rng.next_double() * (dims.height - h));
  return BoundingBox{x1, y1, std::floor(x1 + w), std::floor(y1 + h)};
}

}  // namespace

std::vector<Sample> generate_synthetic_dataset(std::size_t n, std::uint64_t seed,
                                               double deception_fraction) {
  if (n < 1) {
    fail(Errc::ConfigError, "fixture count must be >= 1");
  }
  if (deception_fraction < 0.0 || deception_fraction > 1.0) {
    fail(Errc::ConfigError, "deception_fraction must lie in [0,1]");
  }

  const auto n_deceptive = static_cast<std::size_t>(
      round_half_up(static_cast<double>(n) * deception_fraction));
  std::vector<char> is_deceptive(n, 0);
  std::fill(is_deceptive.begin(), is_deceptive.begin() + std::min(n_deceptive, n), 1);
  SplitMix64 kind_rng(mix_seed(seed, 0xda7a));
  kind_rng.shuffle(is_deceptive);

  constexpr Scenario kScenarios[] = {Scenario::News, Scenario::Booking,
                                     Scenario::Shopping, Scenario::Software};
  constexpr DeceptionCategory kCategories[] = {
      DeceptionCategory::Coercive, DeceptionCategory::Cognitive,
      DeceptionCategory::ContextualPathSpoofing, DeceptionCategory::Emotional};

  std::vector<Sample> samples;
  samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    SplitMix64 rng(mix_seed(seed, i + 1));
    Sample sample;
    sample.id = static_cast<std::int64_t>(i + 1);
    sample.kind = is_deceptive[i] ? SampleKind::Deception : SampleKind::Normal;
    sample.taxonomy.scenario = kScenarios[rng.next_below(4)];
    sample.dims = ImageDims{static_cast<int>(1024 + rng.next_below(2560 - 1024 + 1)),
                            static_cast<int>(768 + rng.next_below(1600 - 768 + 1))};
    sample.correct_box = random_box(rng, sample.dims);
    if (sample.kind == SampleKind::Deception) {
      sample.taxonomy.deception_category = kCategories[rng.next_below(4)];
      // Re-draw until the dark box admits a deceptive click: its centroid or
      // bottom-right fallback must land outside the correct box.
      for (int attempt = 0; attempt < 1000; ++attempt) {
        BoundingBox dark = random_box(rng, sample.dims);
        const double cx = std::floor((dark.x1 + dark.x2) / 2.0);
        const double cy = std::floor((dark.y1 + dark.y2) / 2.0);
        const bool centroid_clear = !sample.correct_box.contains(cx, cy);
        const bool corner_clear =
            !sample.correct_box.contains(dark.x2 - 1.0, dark.y2 - 1.0);
        if (centroid_clear || corner_clear) {
          sample.dark_box = dark;
          break;
        }
      }
      if (!sample.dark_box) {
        fail(Errc::UnresolvableOverlap, "could not place a clickable dark box");
      }
    }
    std::ostringstream task;
    task << "Click the highlighted " << to_string(sample.taxonomy.scenario)
         << " target (fixture " << sample.id << ")";
    sample.task = task.str();
    validate_sample(sample);
    samples.push_back(std::move(sample));
  }
  return samples;
}

}  // namespace clickgate
