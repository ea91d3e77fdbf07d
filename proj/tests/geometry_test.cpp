#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <functional>

#include "clickgate/geometry.hpp"
#include "clickgate/rng.hpp"
#include "support/fixtures.hpp"

using namespace clickgate;
using namespace clickgate::testing;

namespace {

Errc thrown_code(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return Errc::IoError;
}

// Independent membership oracle: literal Eq.-style case test, written
// without touching classify_click's implementation.
RegionLabel oracle_label(int x, int y, const Sample& s) {
  auto inside = [x, y](const BoundingBox& b) {
    return x >= b.x1 && x <= b.x2 && y >= b.y1 && y <= b.y2;
  };
  if (inside(s.correct_box)) return RegionLabel::Benign;
  if (s.dark_box && inside(*s.dark_box)) return RegionLabel::Deceptive;
  return RegionLabel::Null;
}

// Number of integer points of [0,w) x [0,h) inside a closed box, restricted
// to a half-open window. Used as the exact expectation for uniformity.
std::int64_t lattice_points_in_box(const BoundingBox& b, int wx0, int wx1, int wy0,
                                   int wy1) {
  const int x_lo = std::max(wx0, static_cast<int>(std::ceil(b.x1)));
  const int x_hi = std::min(wx1 - 1, static_cast<int>(std::floor(b.x2)));
  const int y_lo = std::max(wy0, static_cast<int>(std::ceil(b.y1)));
  const int y_hi = std::min(wy1 - 1, static_cast<int>(std::floor(b.y2)));
  if (x_hi < x_lo || y_hi < y_lo) return 0;
  return static_cast<std::int64_t>(x_hi - x_lo + 1) * (y_hi - y_lo + 1);
}

}  // namespace

TEST_CASE("classify_click reference points") {
  CHECK(classify_click(ClickPoint{1592, 459}, sample17()) == RegionLabel::Benign);
  CHECK(classify_click(ClickPoint{1200, 850}, sample914()) == RegionLabel::Deceptive);
  // On both boxes' shared edge the correct box wins (case order).
  CHECK(classify_click(ClickPoint{1200, 900}, sample914()) == RegionLabel::Benign);
  CHECK(classify_click(ClickPoint{10, 10}, sample914()) == RegionLabel::Null);
}

TEST_CASE("clicks outside the image are rejected") {
  CHECK(thrown_code([] { classify_click(ClickPoint{-1, 5}, sample17()); }) ==
        Errc::OutOfImage);
  CHECK(thrown_code([] { classify_click(ClickPoint{2156, 5}, sample17()); }) ==
        Errc::OutOfImage);
}

TEST_CASE("labels tile the image (grid oracle)") {
  for (const Sample& s : generate_synthetic_dataset(12, 31, 0.5)) {
    for (int gy = 0; gy < 60; ++gy) {
      for (int gx = 0; gx < 60; ++gx) {
        const int x = static_cast<int>(static_cast<std::int64_t>(gx) *
                                       (s.dims.width - 1) / 59);
        const int y = static_cast<int>(static_cast<std::int64_t>(gy) *
                                       (s.dims.height - 1) / 59);
        CHECK(classify_click(ClickPoint{x, y}, s) == oracle_label(x, y, s));
      }
    }
  }
}

TEST_CASE("centroid floors the midpoint") {
  CHECK(centroid(BoundingBox{1571, 434, 1614, 485}) == ClickPoint{1592, 459});
  CHECK(centroid(BoundingBox{0, 0, 2, 2}) == ClickPoint{1, 1});
  CHECK(centroid(BoundingBox{753, 787, 1768, 900}) == ClickPoint{1260, 843});
}

TEST_CASE("deceptive_click uses the dark centroid when it is clear") {
  CHECK(deceptive_click(sample914()) == ClickPoint{1260, 843});
}

TEST_CASE("deceptive_click shifts to the bottom-right corner under overlap") {
  Sample s = sample914();
  s.dims = ImageDims{1024, 768};
  s.correct_box = BoundingBox{100, 100, 300, 300};
  s.dark_box = BoundingBox{50, 50, 400, 400};
  const ClickPoint click = deceptive_click(s);
  CHECK(click == ClickPoint{399, 399});
  CHECK(classify_click(click, s) == RegionLabel::Deceptive);
}

TEST_CASE("deceptive_click error paths") {
  CHECK(thrown_code([] { deceptive_click(sample17()); }) == Errc::NoDarkBox);

  Sample shadowed = sample914();
  shadowed.dims = ImageDims{1024, 768};
  shadowed.correct_box = BoundingBox{0, 0, 500, 500};
  shadowed.dark_box = BoundingBox{100, 100, 200, 200};  // wholly inside correct
  CHECK(thrown_code([&] { deceptive_click(shadowed); }) == Errc::UnresolvableOverlap);
}

TEST_CASE("sample_null_clicks basics") {
  CHECK(sample_null_clicks(sample17(), 0, 1).empty());

  const auto clicks = sample_null_clicks(sample17(), 100, 3);
  REQUIRE(clicks.size() == 100);
  for (ClickPoint p : clicks) {
    CHECK(classify_click(p, sample17()) == RegionLabel::Null);
  }

  const auto again = sample_null_clicks(sample17(), 100, 3);
  CHECK(clicks == again);
}

TEST_CASE("an all-correct-box image exhausts the null region") {
  Sample s = sample17();
  s.correct_box = BoundingBox{0, 0, 2156, 1204};
  CHECK(thrown_code([&] { sample_null_clicks(s, 1, 9); }) ==
        Errc::NullRegionExhausted);
}

TEST_CASE("null clicks are uniform over the null region (chi-square)") {
  // 1000x1000 image, boxes confined to the first quadrant so every quadrant
  // keeps a distinct null mass. Expected counts come from exact lattice
  // counting; 3 dof at significance 0.01 -> critical value 11.345.
  Sample s;
  s.id = 1;
  s.kind = SampleKind::Deception;
  s.taxonomy.deception_category = DeceptionCategory::Coercive;
  s.dims = ImageDims{1000, 1000};
  s.task = "fixture";
  s.correct_box = BoundingBox{100, 100, 300, 250};
  s.dark_box = BoundingBox{50, 300, 450, 480};

  const int n = 10000;
  const auto clicks = sample_null_clicks(s, n, 2024);

  std::array<std::int64_t, 4> observed{0, 0, 0, 0};
  for (ClickPoint p : clicks) {
    const int q = (p.x >= 500 ? 1 : 0) + (p.y >= 500 ? 2 : 0);
    ++observed[static_cast<std::size_t>(q)];
  }

  std::array<double, 4> null_mass{};
  double total_mass = 0.0;
  const int bounds[4][4] = {{0, 500, 0, 500}, {500, 1000, 0, 500},
                            {0, 500, 500, 1000}, {500, 1000, 500, 1000}};
  for (int q = 0; q < 4; ++q) {
    const auto [x0, x1, y0, y1] = bounds[q];
    std::int64_t points = static_cast<std::int64_t>(x1 - x0) * (y1 - y0);
    points -= lattice_points_in_box(s.correct_box, x0, x1, y0, y1);
    points -= lattice_points_in_box(*s.dark_box, x0, x1, y0, y1);
    null_mass[static_cast<std::size_t>(q)] = static_cast<double>(points);
    total_mass += static_cast<double>(points);
  }

  double chi_square = 0.0;
  for (int q = 0; q < 4; ++q) {
    const double expected = n * null_mass[static_cast<std::size_t>(q)] / total_mass;
    const double diff = observed[static_cast<std::size_t>(q)] - expected;
    chi_square += diff * diff / expected;
  }
  CHECK(chi_square < 11.345);
}

TEST_CASE("training clicks per sample") {
  const auto normal = generate_training_clicks(sample17(), 1, 4);
  REQUIRE(normal.size() == 2);
  CHECK(normal[0].label == RegionLabel::Benign);
  CHECK(normal[0].origin == ClickOrigin::CentroidBenign);
  CHECK(normal[1].label == RegionLabel::Null);

  const auto deceptive = generate_training_clicks(sample914(), 1, 4);
  REQUIRE(deceptive.size() == 3);
  CHECK(deceptive[0].label == RegionLabel::Benign);
  CHECK(deceptive[1].label == RegionLabel::Deceptive);
  CHECK(deceptive[1].origin == ClickOrigin::CentroidDeceptive);
  CHECK(deceptive[2].label == RegionLabel::Null);

  CHECK(generate_training_clicks(sample17(), 0, 4).size() == 1);
}

TEST_CASE("training click labels always agree with the rule") {
  for (const Sample& s : generate_synthetic_dataset(30, 12, 0.5)) {
    for (const TrainingClick& tc : generate_training_clicks(s, 3, 17)) {
      CHECK(classify_click(tc.click, s) == tc.label);
    }
  }
}

TEST_CASE("region areas of the reference deception sample") {
  const RegionAreas areas = region_areas(sample914());
  CHECK(areas.s_image == 3833407.0);
  CHECK(areas.s_correct == 22104.0);
  CHECK(areas.s_deceptive == 114695.0);
  CHECK(areas.s_overlap == 0.0);  // boxes touch along y=900 but do not overlap
  CHECK(areas.s_null == 3696608.0);
}

TEST_CASE("region areas degenerate cases") {
  CHECK(region_areas(sample17()).s_deceptive == 0.0);

  Sample s = sample914();
  s.dark_box = s.correct_box;  // fully overlapping
  const RegionAreas areas = region_areas(s);
  CHECK(areas.s_null == areas.s_image - areas.s_correct);
}

TEST_CASE("area identity holds for random geometry") {
  for (const Sample& s : generate_synthetic_dataset(100, 23, 0.6)) {
    const RegionAreas a = region_areas(s);
    CHECK(a.s_correct + a.s_deceptive + a.s_null - a.s_overlap ==
          doctest::Approx(a.s_image).epsilon(1e-12));
    CHECK(a.s_null >= 0.0);
  }
}

TEST_CASE("boundary distance to a single box") {
  Sample s = sample17();
  s.correct_box = BoundingBox{0, 0, 100, 100};
  CHECK(boundary_distance(ClickPoint{50, 50}, s, RegionLabel::Benign) == 50.0);
  CHECK(boundary_distance(ClickPoint{150, 50}, s, RegionLabel::Benign) == 50.0);
  CHECK(boundary_distance(ClickPoint{0, 50}, s, RegionLabel::Benign) == 0.0);
  // Null target on a Normal sample: the frontier is the correct box outline.
  CHECK(boundary_distance(ClickPoint{50, 50}, s, RegionLabel::Null) == 50.0);
  // Corner distance is Euclidean.
  CHECK(boundary_distance(ClickPoint{103, 104}, s, RegionLabel::Benign) == 5.0);
}

TEST_CASE("boundary distance errors") {
  CHECK(thrown_code([] {
          boundary_distance(ClickPoint{5, 5}, sample17(), RegionLabel::Deceptive);
        }) == Errc::NoSuchRegion);
  CHECK(thrown_code([] {
          boundary_distance(ClickPoint{-4, 2}, sample17(), RegionLabel::Benign);
        }) == Errc::OutOfImage);
}

TEST_CASE("shared edges of touching boxes are interior to the union") {
  // Two stacked boxes forming [0,0,100,200]; the y=100 seam is not a null
  // frontier, so a click on it is 50px from the true outline.
  Sample s;
  s.id = 2;
  s.kind = SampleKind::Deception;
  s.taxonomy.deception_category = DeceptionCategory::Cognitive;
  s.dims = ImageDims{1024, 768};
  s.task = "fixture";
  s.correct_box = BoundingBox{0, 0, 100, 100};
  s.dark_box = BoundingBox{0, 100, 100, 200};
  CHECK(boundary_distance(ClickPoint{50, 100}, s, RegionLabel::Null) == 50.0);
  // A point outside, level with the seam, measures to the outer edge.
  CHECK(boundary_distance(ClickPoint{130, 100}, s, RegionLabel::Null) == 30.0);
  // Box targets still use the full box outline.
  CHECK(boundary_distance(ClickPoint{50, 100}, s, RegionLabel::Benign) == 0.0);
}

TEST_CASE("null frontier of the reference sample") {
  // (1200, 899) sits in the dark box 1px above the seam. The seam segment
  // under the correct box is interior to the union, so the nearest frontier
  // is the correct box's bottom edge at y=972, 73px below — not the seam.
  const double d = boundary_distance(ClickPoint{1200, 899}, sample914(),
                                     RegionLabel::Null);
  CHECK(d > 1.0);
  CHECK(d == 73.0);
}

TEST_CASE("training click serialization round-trips") {
  SplitMix64 rng(6);
  for (const Sample& s : generate_synthetic_dataset(20, 41, 0.5)) {
    for (const TrainingClick& tc : generate_training_clicks(s, 2, rng.next())) {
      CHECK(parse_training_click(serialize_training_click(tc)) == tc);
    }
  }
}
