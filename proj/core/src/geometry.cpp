#include "clickgate/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "clickgate/rng.hpp"

namespace clickgate {

using ordered_json = nlohmann::ordered_json;

RegionLabel label_from_value(int value) {
  switch (value) {
    case -1: return RegionLabel::Deceptive;
    case 0: return RegionLabel::Null;
    case 1: return RegionLabel::Benign;
    default:
      fail(Errc::InvariantViolation,
           "region label must be -1, 0 or 1, got " + std::to_string(value));
  }
}

std::string_view to_string(RegionLabel label) noexcept {
  switch (label) {
    case RegionLabel::Benign: return "Benign";
    case RegionLabel::Null: return "Null";
    case RegionLabel::Deceptive: return "Deceptive";
  }
  return "Null";
}

std::string_view to_string(ClickOrigin origin) noexcept {
  switch (origin) {
    case ClickOrigin::CentroidBenign: return "CentroidBenign";
    case ClickOrigin::CentroidDeceptive: return "CentroidDeceptive";
    case ClickOrigin::RandomNull: return "RandomNull";
  }
  return "RandomNull";
}

ClickOrigin parse_click_origin(std::string_view text) {
  if (text == "CentroidBenign") return ClickOrigin::CentroidBenign;
  if (text == "CentroidDeceptive") return ClickOrigin::CentroidDeceptive;
  if (text == "RandomNull") return ClickOrigin::RandomNull;
  fail(Errc::MalformedRecord, "unknown click origin '" + std::string(text) + "'");
}

RegionLabel classify_click(ClickPoint click, const Sample& sample) {
  if (click.x < 0 || click.y < 0 || click.x >= sample.dims.width ||
      click.y >= sample.dims.height) {
    fail(Errc::OutOfImage, "click (" + std::to_string(click.x) + ", " +
                               std::to_string(click.y) + ") outside " +
                               std::to_string(sample.dims.width) + "x" +
                               std::to_string(sample.dims.height));
  }
  const double x = click.x;
  const double y = click.y;
  if (sample.correct_box.contains(x, y)) return RegionLabel::Benign;
  if (sample.dark_box && sample.dark_box->contains(x, y)) return RegionLabel::Deceptive;
  return RegionLabel::Null;
}

ClickPoint centroid(const BoundingBox& box) {
  return ClickPoint{static_cast<int>(std::floor((box.x1 + box.x2) / 2.0)),
                    static_cast<int>(std::floor((box.y1 + box.y2) / 2.0))};
}

ClickPoint deceptive_click(const Sample& sample) {
  if (!sample.dark_box) {
    fail(Errc::NoDarkBox, "deceptive click requested on a Normal sample");
  }
  ClickPoint click = centroid(*sample.dark_box);
  if (sample.correct_box.contains(click.x, click.y)) {
    // Push to the bottom-right edge of the dark box.
    click = ClickPoint{static_cast<int>(sample.dark_box->x2) - 1,
                       static_cast<int>(sample.dark_box->y2) - 1};
  }
  if (classify_click(click, sample) != RegionLabel::Deceptive) {
    fail(Errc::UnresolvableOverlap,
         "no deceptive click available: dark box is shadowed by the correct box");
  }
  return click;
}

std::vector<ClickPoint> sample_null_clicks(const Sample& sample, std::size_t n,
                                           std::uint64_t seed) {
  std::vector<ClickPoint> clicks;
  clicks.reserve(n);
  SplitMix64 rng(seed);
  int consecutive_rejections = 0;
  while (clicks.size() < n) {
    ClickPoint candidate{
        static_cast<int>(rng.next_below(static_cast<std::uint64_t>(sample.dims.width))),
        static_cast<int>(rng.next_below(static_cast<std::uint64_t>(sample.dims.height)))};
    if (classify_click(candidate, sample) == RegionLabel::Null) {
      clicks.push_back(candidate);
      consecutive_rejections = 0;
    } else if (++consecutive_rejections >= kNullSamplingMaxAttempts) {
      fail(Errc::NullRegionExhausted,
           std::to_string(kNullSamplingMaxAttempts) +
               " consecutive rejections sampling the null region of sample " +
               std::to_string(sample.id));
    }
  }
  return clicks;
}

std::vector<TrainingClick> generate_training_clicks(const Sample& sample,
                                                    std::size_t n_null,
                                                    std::uint64_t seed) {
  std::vector<TrainingClick> clicks;
  clicks.reserve(n_null + 2);
  clicks.push_back(TrainingClick{sample.id, centroid(sample.correct_box),
                                 RegionLabel::Benign, ClickOrigin::CentroidBenign});
  if (sample.dark_box) {
    clicks.push_back(TrainingClick{sample.id, deceptive_click(sample),
                                   RegionLabel::Deceptive,
                                   ClickOrigin::CentroidDeceptive});
  }
  for (ClickPoint p : sample_null_clicks(sample, n_null, seed)) {
    clicks.push_back(TrainingClick{sample.id, p, RegionLabel::Null,
                                   ClickOrigin::RandomNull});
  }
  for (const TrainingClick& tc : clicks) {
    if (classify_click(tc.click, sample) != tc.label) {
      fail(Errc::InvariantViolation, "generated click label disagrees with the rule");
    }
  }
  return clicks;
}

namespace {

double intersection_area(const BoundingBox& a, const BoundingBox& b) {
  const double ix = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  const double iy = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  return ix * iy;
}

}  // namespace

RegionAreas region_areas(const Sample& sample) {
  RegionAreas areas;
  areas.s_image = sample.dims.area();
  areas.s_correct = sample.correct_box.area();
  if (sample.dark_box) {
    areas.s_deceptive = sample.dark_box->area();
    areas.s_overlap = intersection_area(sample.correct_box, *sample.dark_box);
  }
  areas.s_null = areas.s_image - areas.s_correct - areas.s_deceptive + areas.s_overlap;
  return areas;
}

namespace {

struct Segment {
  double x1, y1, x2, y2;  // axis-aligned
};

double point_segment_distance(double px, double py, const Segment& s) {
  const double dx = s.x2 - s.x1;
  const double dy = s.y2 - s.y1;
  const double len_sq = dx * dx + dy * dy;
  double t = 0.0;
  if (len_sq > 0.0) {
    t = std::clamp(((px - s.x1) * dx + (py - s.y1) * dy) / len_sq, 0.0, 1.0);
  }
  const double cx = s.x1 + t * dx;
  const double cy = s.y1 + t * dy;
  return std::hypot(px - cx, py - cy);
}

void box_outline(const BoundingBox& b, std::vector<Segment>& out) {
  out.push_back(Segment{b.x1, b.y1, b.x2, b.y1});  // top
  out.push_back(Segment{b.x1, b.y2, b.x2, b.y2});  // bottom
  out.push_back(Segment{b.x1, b.y1, b.x1, b.y2});  // left
  out.push_back(Segment{b.x2, b.y1, b.x2, b.y2});  // right
}

// Emits the sub-intervals of [lo, hi] left after removing the open interval
// (cut_lo, cut_hi). Degenerate leftovers collapse to points, which is fine
// for distance queries.
template <typename Emit>
void emit_clipped(double lo, double hi, double cut_lo, double cut_hi, Emit emit) {
  cut_lo = std::max(cut_lo, lo);
  cut_hi = std::min(cut_hi, hi);
  if (cut_lo >= cut_hi) {  // no overlap with the cut
    emit(lo, hi);
    return;
  }
  emit(lo, cut_lo);
  emit(cut_hi, hi);
}

// Outline of a ∪ b: each edge of one box loses the (open) portion whose
// outward side is covered by the other box. Shared edges with interiors on
// both sides are interior to the union and drop out, which is what makes a
// touching box pair (e.g. stacked banner over button) produce the true
// frontier of the null region.
void union_outline(const BoundingBox& a, const BoundingBox& b,
                   std::vector<Segment>& out) {
  auto one_box = [&out](const BoundingBox& self, const BoundingBox& other) {
    // top edge (y = self.y1): absorbed where other covers the strip above
    if (other.y1 < self.y1 && self.y1 <= other.y2) {
      emit_clipped(self.x1, self.x2, other.x1, other.x2, [&](double lo, double hi) {
        out.push_back(Segment{lo, self.y1, hi, self.y1});
      });
    } else {
      out.push_back(Segment{self.x1, self.y1, self.x2, self.y1});
    }
    // bottom edge (y = self.y2): absorbed where other covers the strip below
    if (other.y1 <= self.y2 && self.y2 < other.y2) {
      emit_clipped(self.x1, self.x2, other.x1, other.x2, [&](double lo, double hi) {
        out.push_back(Segment{lo, self.y2, hi, self.y2});
      });
    } else {
      out.push_back(Segment{self.x1, self.y2, self.x2, self.y2});
    }
    // left edge (x = self.x1): absorbed where other covers the strip leftwards
    if (other.x1 < self.x1 && self.x1 <= other.x2) {
      emit_clipped(self.y1, self.y2, other.y1, other.y2, [&](double lo, double hi) {
        out.push_back(Segment{self.x1, lo, self.x1, hi});
      });
    } else {
      out.push_back(Segment{self.x1, self.y1, self.x1, self.y2});
    }
    // right edge (x = self.x2): absorbed where other covers the strip rightwards
    if (other.x1 <= self.x2 && self.x2 < other.x2) {
      emit_clipped(self.y1, self.y2, other.y1, other.y2, [&](double lo, double hi) {
        out.push_back(Segment{self.x2, lo, self.x2, hi});
      });
    } else {
      out.push_back(Segment{self.x2, self.y1, self.x2, self.y2});
    }
  };
  one_box(a, b);
  one_box(b, a);
}

}  // namespace

double boundary_distance(ClickPoint click, const Sample& sample, RegionLabel target) {
  if (click.x < 0 || click.y < 0 || click.x >= sample.dims.width ||
      click.y >= sample.dims.height) {
    fail(Errc::OutOfImage, "boundary_distance click outside the image");
  }

  std::vector<Segment> segments;
  switch (target) {
    case RegionLabel::Benign:
      box_outline(sample.correct_box, segments);
      break;
    case RegionLabel::Deceptive:
      if (!sample.dark_box) {
        fail(Errc::NoSuchRegion, "no deceptive region on a Normal sample");
      }
      box_outline(*sample.dark_box, segments);
      break;
    case RegionLabel::Null:
      if (sample.dark_box) {
        union_outline(sample.correct_box, *sample.dark_box, segments);
      } else {
        box_outline(sample.correct_box, segments);
      }
      break;
  }

  double best = std::numeric_limits<double>::infinity();
  for (const Segment& s : segments) {
    best = std::min(best, point_segment_distance(click.x, click.y, s));
  }
  return best;
}

std::string serialize_training_click(const TrainingClick& click) {
  ordered_json rec;
  rec["sample_id"] = click.sample_id;
  rec["x"] = click.click.x;
  rec["y"] = click.click.y;
  rec["label"] = label_value(click.label);
  rec["origin"] = to_string(click.origin);
  return rec.dump();
}

TrainingClick parse_training_click(std::string_view line) {
  ordered_json rec = ordered_json::parse(line, nullptr, false);
  if (rec.is_discarded() || !rec.is_object()) {
    fail(Errc::MalformedRecord, "training click line is not a JSON object");
  }
  try {
    TrainingClick click;
    click.sample_id = rec.at("sample_id").get<std::int64_t>();
    click.click = ClickPoint{rec.at("x").get<int>(), rec.at("y").get<int>()};
    click.label = label_from_value(rec.at("label").get<int>());
    click.origin = parse_click_origin(rec.at("origin").get<std::string>());
    return click;
  } catch (const ordered_json::exception& e) {
    fail(Errc::MalformedRecord, e.what());
  }
}

}  // namespace clickgate
