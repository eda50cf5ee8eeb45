#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "uamap/geometry.hpp"
#include "uamap/rng.hpp"
#include "uamap/scene_gen.hpp"

using namespace uamap;

TEST_CASE("class names round-trip") {
  CHECK(std::string(class_name(ElementClass::kBoundary)) == "boundary");
  CHECK(std::string(class_name(ElementClass::kDivider)) == "divider");
  CHECK(std::string(class_name(ElementClass::kPedCrossing)) == "ped_crossing");
  CHECK(std::string(class_name(ElementClass::kCenterline)) == "centerline");
  for (int c = 0; c < kNumClasses; ++c) {
    const ElementClass cls = static_cast<ElementClass>(c);
    CHECK(class_from_name(class_name(cls)) == cls);
  }
  CHECK_THROWS_AS(class_from_name("sidewalk"), std::invalid_argument);
}

TEST_CASE("normalize_to_bev maps box corners and center") {
  const Vec2 half{30.0, 15.0};
  const Vec2 center = normalize_to_bev({0.0, 0.0}, half);
  CHECK(center.x == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(center.y == doctest::Approx(0.5).epsilon(1e-15));

  const Vec2 corner = normalize_to_bev({30.0, 15.0}, half);
  CHECK(corner.x == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(corner.y == doctest::Approx(1.0).epsilon(1e-15));

  const Vec2 q = normalize_to_bev({-15.0, 7.5}, half);
  CHECK(q.x == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(q.y == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("normalize_to_bev rejects bad inputs") {
  CHECK_THROWS_AS(normalize_to_bev({31.0, 0.0}), std::domain_error);
  CHECK_THROWS_AS(normalize_to_bev({0.0, -15.1}), std::domain_error);
  CHECK_THROWS_AS(normalize_to_bev({0.0, 0.0}, {0.0, 15.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(normalize_to_bev({0.0, 0.0}, {30.0, -1.0}),
                  std::invalid_argument);
}

TEST_CASE("normalize/denormalize round-trip on random in-box points") {
  Rng rng(42);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Vec2 p{rng.uniform(-kPerceptionHalfX, kPerceptionHalfX),
                 rng.uniform(-kPerceptionHalfY, kPerceptionHalfY)};
    const Vec2 back = denormalize_from_bev(normalize_to_bev(p));
    worst = std::max(worst, std::max(std::abs(back.x - p.x),
                                     std::abs(back.y - p.y)));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("clip keeps fully inside polylines unchanged") {
  MapElement e;
  e.id = 3;
  e.cls = ElementClass::kDivider;
  e.points = {{-10.0, -5.0}, {0.0, 0.0}, {10.0, 5.0}};
  const std::vector<MapElement> out = clip_to_perception_range({{e}});
  REQUIRE(out.size() == 1);
  CHECK(out[0].id == 3);
  CHECK(out[0].points.size() == 3);
  CHECK(out[0].points[2].x == 10.0);
}

TEST_CASE("clip drops fully outside polylines") {
  MapElement inside;
  inside.id = 1;
  inside.points = {{0.0, 0.0}, {1.0, 1.0}};
  MapElement outside;
  outside.id = 2;
  outside.points = {{40.0, 0.0}, {45.0, 0.0}, {50.0, 0.0}};
  const std::vector<MapElement> out =
      clip_to_perception_range({{inside, outside}});
  REQUIRE(out.size() == 1);
  CHECK(out[0].id == 1);
}

TEST_CASE("clip truncates at the last inside vertex without interpolation") {
  MapElement e;
  e.id = 9;
  e.points = {{27.0, 0.0}, {29.0, 0.0}, {31.0, 0.0}, {33.0, 0.0}};
  const std::vector<MapElement> out = clip_to_perception_range({{e}});
  REQUIRE(out.size() == 1);
  REQUIRE(out[0].points.size() == 2);
  CHECK(out[0].points[0].x == 27.0);
  CHECK(out[0].points[1].x == 29.0);  // no synthetic point at x = 30
}

TEST_CASE("clip drops elements reduced below two vertices") {
  MapElement e;
  e.id = 5;
  e.points = {{29.0, 0.0}, {31.0, 0.0}, {33.0, 0.0}};
  CHECK(clip_to_perception_range({{e}}).empty());
}

TEST_CASE("clip matches a brute-force in-box filter on generated scenes") {
  for (const auto layout : {Layout::kStraight, Layout::kCurve,
                            Layout::kIntersection, Layout::kParking}) {
    const Scene scene = generate_scene(layout, 11);
    const std::vector<MapElement> got =
        clip_to_perception_range(scene.elements);

    std::vector<MapElement> expected;
    for (const MapElement& e : scene.elements) {
      MapElement kept;
      kept.id = e.id;
      kept.cls = e.cls;
      for (const Vec2& p : e.points) {
        if (std::abs(p.x) <= kPerceptionHalfX &&
            std::abs(p.y) <= kPerceptionHalfY) {
          kept.points.push_back(p);
        }
      }
      if (kept.points.size() >= 2) expected.push_back(kept);
    }

    REQUIRE(got.size() == expected.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].id == expected[i].id);
      REQUIRE(got[i].points.size() == expected[i].points.size());
      for (std::size_t v = 0; v < got[i].points.size(); ++v) {
        CHECK(got[i].points[v].x == expected[i].points[v].x);
        CHECK(got[i].points[v].y == expected[i].points[v].y);
      }
    }
  }
}

TEST_CASE("clip is idempotent") {
  const Scene scene = generate_scene(Layout::kIntersection, 4);
  const std::vector<MapElement> once =
      clip_to_perception_range(scene.elements);
  const std::vector<MapElement> twice = clip_to_perception_range(once);
  REQUIRE(once.size() == twice.size());
  for (std::size_t i = 0; i < once.size(); ++i) {
    CHECK(once[i].points.size() == twice[i].points.size());
  }
}

TEST_CASE("validate_scene accepts generated scenes") {
  for (const auto layout : {Layout::kStraight, Layout::kCurve,
                            Layout::kIntersection, Layout::kParking}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const Scene scene = generate_scene(layout, seed);
      const std::vector<Violation> violations = validate_scene(scene);
      for (const Violation& v : violations) {
        CAPTURE(v.subject);
        CAPTURE(v.message);
      }
      CHECK(violations.empty());
    }
  }
}

TEST_CASE("validate_scene flags a short history naming the agent") {
  Scene scene = generate_scene(Layout::kStraight, 2);
  scene.agents[0].history.samples.pop_back();  // 19 steps
  const std::vector<Violation> violations = validate_scene(scene);
  REQUIRE_FALSE(violations.empty());
  bool found = false;
  for (const Violation& v : violations) {
    if (v.subject == "agent" &&
        v.id == scene.agents[0].history.agent_id) {
      found = true;
    }
  }
  CHECK(found);
}

TEST_CASE("validate_scene flags duplicate element ids") {
  Scene scene = generate_scene(Layout::kStraight, 2);
  scene.elements[1].id = scene.elements[0].id;
  const std::vector<Violation> violations = validate_scene(scene);
  bool found = false;
  for (const Violation& v : violations) {
    if (v.subject == "element" && v.id == scene.elements[0].id) found = true;
  }
  CHECK(found);
}

TEST_CASE("validate_scene flags non-finite coordinates") {
  Scene scene = generate_scene(Layout::kCurve, 2);
  scene.elements[0].points[0].x = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(validate_scene(scene).empty());
}
