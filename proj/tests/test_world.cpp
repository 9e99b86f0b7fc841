#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "platesim/rng.hpp"
#include "platesim/world.hpp"

using namespace platesim;

namespace {

// Independent ray/segment oracle: implicit line form for the segment, then a
// bounding-box check on the intersection point.
std::optional<std::pair<double, std::size_t>> brute_cast(const World& w, Vec2 o, Vec2 d, double max_range) {
  std::optional<std::pair<double, std::size_t>> best;
  for (std::size_t i = 0; i < w.surfaces.size(); ++i) {
    const Segment& s = w.surfaces[i];
    const double a = s.b.y - s.a.y;
    const double b = s.a.x - s.b.x;
    const double c = a * s.a.x + b * s.a.y;
    const double den = a * d.x + b * d.y;
    if (std::abs(den) < 1e-15) continue;
    const double t = (c - a * o.x - b * o.y) / den;
    if (t <= 1e-12 || t > max_range) continue;
    const Vec2 p = o + d * t;
    const double eps = 1e-9;
    if (p.x < std::min(s.a.x, s.b.x) - eps || p.x > std::max(s.a.x, s.b.x) + eps) continue;
    if (p.y < std::min(s.a.y, s.b.y) - eps || p.y > std::max(s.a.y, s.b.y) + eps) continue;
    if (!best || t < best->first - 1e-12) best = std::make_pair(t, i);
  }
  return best;
}

World one_box_world() {
  return load_scenario("garage 6.0 3.6\nstart 1 1 0\nbox 3 2 0.45 0.35 0 S\n");
}

}  // namespace

TEST(World, MinimalScenarioSegments) {
  const World w = one_box_world();
  EXPECT_EQ(w.boundary_segments.size(), 4u);
  EXPECT_EQ(w.surfaces.size(), 8u);
  ASSERT_EQ(w.plates.size(), 1u);
  EXPECT_NEAR(w.plates[0].outward_normal.y, -1.0, 1e-12);
}

TEST(World, BoxOutsideGarageIsRejectedWithLine) {
  try {
    load_scenario("garage 6.0 3.6\nstart 1 1 0\n\nbox 10 0 0.45 0.35 0 S\n");
    FAIL() << "expected ScenarioError";
  } catch (const ScenarioError& e) {
    EXPECT_EQ(e.line(), 4);
  }
}

TEST(World, ScenarioSyntaxErrors) {
  EXPECT_THROW(load_scenario("start 1 1 0\n"), ScenarioError);
  EXPECT_THROW(load_scenario("garage 6 3.6\n"), ScenarioError);
  EXPECT_THROW(load_scenario("garage 6 3.6\nstart 1 1 0\nbox 3 2 0.45 0.35 0 Q\n"), ScenarioError);
  EXPECT_THROW(load_scenario("garage 6 x\nstart 1 1 0\n"), ScenarioError);
  EXPECT_THROW(load_scenario("garage 6 3.6\nstart 3 2 0\nbox 3 2 0.45 0.35 0 S\n"), ScenarioError);
  EXPECT_THROW(load_scenario("garage 6 3.6\ngarage 6 3.6\nstart 1 1 0\n"), ScenarioError);
}

TEST(World, SerializeRoundTrip) {
  for (int c = 1; c <= 4; ++c) {
    const World w = build_test_case(c, 0.45, 0.35, 17);
    const std::string text = serialize_world(w);
    EXPECT_EQ(serialize_world(load_scenario(text)), text);
  }
}

TEST(World, TestCaseOnePlateSpacing) {
  const World w = build_test_case(1, 0.45, 0.35, 0);
  ASSERT_EQ(w.plates.size(), 4u);
  for (std::size_t i = 1; i < w.plates.size(); ++i) {
    EXPECT_NEAR(w.plates[i].center.x - w.plates[i - 1].center.x, 0.70, 1e-12);
    EXPECT_NEAR(w.plates[i].outward_normal.x, w.plates[0].outward_normal.x, 1e-12);
    EXPECT_NEAR(w.plates[i].outward_normal.y, w.plates[0].outward_normal.y, 1e-12);
  }
  // Row front is 2 m from the start point.
  EXPECT_NEAR(w.plates[0].center.y - w.start_pose.position.y, 2.0, 1e-12);
}

TEST(World, TestCaseThreeTwoRows) {
  const World w = build_test_case(3, 0.45, 0.35, 0);
  ASSERT_EQ(w.plates.size(), 6u);
  EXPECT_NEAR(w.plates[0].center.x - w.start_pose.position.x, 2.0, 1e-12);
  // 1.37 m clear between the back of row 1 and the front of row 2.
  EXPECT_NEAR(w.plates[3].center.x - w.plates[0].center.x, 0.35 + 1.37, 1e-12);
  for (const auto& p : w.plates) EXPECT_NEAR(p.outward_normal.x, -1.0, 1e-12);
}

TEST(World, ZeroJitterMatchesUnjitteredCase) {
  TestCaseOptions opt;
  opt.jitter_seed = 1234;
  opt.jitter_amplitude = 0.0;
  EXPECT_EQ(serialize_world(build_test_case(2, opt)), serialize_world(build_test_case(1, opt)));
  EXPECT_EQ(serialize_world(build_test_case(4, opt)), serialize_world(build_test_case(3, opt)));
  EXPECT_NE(serialize_world(build_test_case(2, 0.45, 0.35, 1)), serialize_world(build_test_case(1, 0.45, 0.35, 1)));
  EXPECT_THROW(build_test_case(5, 0.45, 0.35, 0), std::invalid_argument);
}

TEST(World, RayCastExamples) {
  const World empty = load_scenario("garage 2 1\nstart 0.5 0.5 0\n");
  EXPECT_DOUBLE_EQ(*ray_cast(empty, {0.0, 0.5}, {1.0, 0.0}, 4.0), 2.0);
  const World wide = load_scenario("garage 5.2 1\nstart 0.5 0.5 0\n");
  EXPECT_FALSE(ray_cast(wide, {0.0, 0.5}, {1.0, 0.0}, 4.0));
}

TEST(World, RayCastMatchesBruteForce) {
  const World w = build_test_case(4, 0.45, 0.35, 3);
  RngStream rng(2024);
  int hits = 0;
  for (int i = 0; i < 1000; ++i) {
    const Vec2 o{rng.uniform(0.01, 5.99), rng.uniform(0.01, 3.59)};
    const Vec2 d = unit_from_angle(rng.uniform(-kPi, kPi));
    const auto fast = cast_ray(w, o, d, 4.0);
    const auto slow = brute_cast(w, o, d, 4.0);
    ASSERT_EQ(fast.has_value(), slow.has_value()) << "ray " << i;
    if (fast) {
      ++hits;
      EXPECT_NEAR(fast->distance, slow->first, 1e-9);
      EXPECT_EQ(fast->segment, slow->second);
    }
  }
  EXPECT_GT(hits, 500);
}

TEST(World, CornerGrazeTieBreaksToLowestIndex) {
  const World w = one_box_world();
  const auto corner = w.boxes[0].corners()[0];  // south-west corner: S and W faces meet
  const Vec2 o{1.0, 1.0};
  const Vec2 d = normalized(corner - o);
  const auto hit = cast_ray(w, o, d, 4.0);
  ASSERT_TRUE(hit);
  std::size_t lowest = std::numeric_limits<std::size_t>::max();
  for (std::size_t i = 0; i < w.surfaces.size(); ++i) {
    const auto t = intersect_ray_segment(o, d, w.surfaces[i]);
    if (t && std::abs(*t - hit->distance) < 1e-12) lowest = std::min(lowest, i);
  }
  EXPECT_EQ(hit->segment, lowest);
  EXPECT_EQ(cast_ray(w, o, d, 4.0)->segment, hit->segment);
}

TEST(World, VisibilityHeadOn) {
  const World w = one_box_world();
  const Vec2 plate = w.plates[0].center;
  const auto seen = plate_visibility(w, Pose{plate + Vec2{0.0, -1.0}, kPi / 2.0}, 1.466, 3.0, 1.31);
  ASSERT_EQ(seen.size(), 1u);
  EXPECT_NEAR(seen[0].distance, 1.0, 1e-12);
  EXPECT_NEAR(seen[0].incidence, 0.0, 1e-7);
}

TEST(World, VisibilityAtFortyFiveDegrees) {
  const World w = one_box_world();
  const Vec2 plate = w.plates[0].center;
  const Vec2 cam = plate + Vec2{-std::sqrt(0.5), -std::sqrt(0.5)};
  const auto seen = plate_visibility(w, Pose{cam, kPi / 4.0}, 1.466, 3.0, deg_to_rad(75.0));
  ASSERT_EQ(seen.size(), 1u);
  EXPECT_NEAR(seen[0].incidence, kPi / 4.0, 1e-9);
  // Cross-check: the angle between the sight line and the plate normal.
  const Vec2 ray = normalized(plate - cam);
  EXPECT_NEAR(std::acos(-dot(ray, w.plates[0].outward_normal)), seen[0].incidence, 1e-12);
  EXPECT_TRUE(plate_visibility(w, Pose{cam, kPi / 4.0}, 1.466, 3.0, deg_to_rad(40.0)).empty());
}

TEST(World, VisibilityOccludedByBox) {
  const World w = load_scenario("garage 6 3.6\nstart 1 0.5 0\nbox 3 2 0.45 0.35 0 S\nbox 3 1.2 0.45 0.35 0 -\n");
  const Vec2 plate = w.plates[0].center;
  EXPECT_TRUE(plate_visibility(w, Pose{{3.0, 0.5}, kPi / 2.0}, 1.466, 3.0, 1.31).empty());
  EXPECT_EQ(plate_visibility(w, Pose{plate + Vec2{0.0, -0.3}, kPi / 2.0}, 1.466, 3.0, 1.31).size(), 1u);
}

TEST(World, VisibilityInvariantUnderHalfTurn) {
  // Rotating the whole scene by pi about the garage centre must not change
  // what the camera sees.
  const World w = build_test_case(3, 0.45, 0.35, 0);
  const Vec2 c{w.garage.width() / 2.0, w.garage.height() / 2.0};
  std::vector<BoxObstacle> boxes;
  for (auto b : w.boxes) {
    b.center = c * 2.0 - b.center;
    b.yaw = wrap_angle(b.yaw + kPi);
    boxes.push_back(b);
  }
  const Pose start{c * 2.0 - w.start_pose.position, wrap_angle(w.start_pose.yaw + kPi)};
  const World r = make_world(w.garage.width(), w.garage.height(), start, boxes);
  RngStream rng(9);
  int nonempty = 0;
  for (int i = 0; i < 500; ++i) {
    const Pose cam{{rng.uniform(0.1, 2.8), rng.uniform(0.1, 3.5)}, rng.uniform(-kPi, kPi)};
    const Pose rot{c * 2.0 - cam.position, wrap_angle(cam.yaw + kPi)};
    const auto a = plate_visibility(w, cam, 1.466, 3.0, 1.31);
    const auto b = plate_visibility(r, rot, 1.466, 3.0, 1.31);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      EXPECT_EQ(a[k].plate_id, b[k].plate_id);
      EXPECT_NEAR(a[k].distance, b[k].distance, 1e-9);
      EXPECT_NEAR(a[k].incidence, b[k].incidence, 1e-6);
    }
    nonempty += !a.empty();
  }
  EXPECT_GT(nonempty, 20);
}

TEST(World, Collision) {
  const World w = one_box_world();
  EXPECT_TRUE(in_collision(w, {3.0, 2.0}));
  EXPECT_TRUE(in_collision(w, {-0.1, 1.0}));
  EXPECT_FALSE(in_collision(w, {1.0, 1.0}));
}
