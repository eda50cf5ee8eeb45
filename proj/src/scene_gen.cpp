#include "uamap/scene_gen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "uamap/rng.hpp"

namespace uamap {
namespace {

constexpr double kPi = std::numbers::pi;

std::vector<Vec2> sample_segment(Vec2 a, Vec2 b, double spacing) {
  const double len = (b - a).norm();
  const int n = std::max(2, static_cast<int>(std::ceil(len / spacing)) + 1);
  std::vector<Vec2> pts;
  pts.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / (n - 1);
    pts.push_back(a + (b - a) * t);
  }
  return pts;
}

// Angles in radians, swept from a0 to a1 (either direction).
std::vector<Vec2> sample_arc(Vec2 center, double radius, double a0, double a1,
                             double spacing) {
  const double len = std::abs(a1 - a0) * radius;
  const int n = std::max(2, static_cast<int>(std::ceil(len / spacing)) + 1);
  std::vector<Vec2> pts;
  pts.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / (n - 1);
    const double a = a0 + (a1 - a0) * t;
    pts.push_back(center + Vec2{radius * std::cos(a), radius * std::sin(a)});
  }
  return pts;
}

/// Arc-length parameterization of a polyline; used to march agents along
/// centerline routes at constant speed.
class ArcLengthPath {
 public:
  explicit ArcLengthPath(std::vector<Vec2> pts) : pts_(std::move(pts)) {
    if (pts_.size() < 2) throw std::invalid_argument("path needs >= 2 points");
    cum_.resize(pts_.size(), 0.0);
    for (std::size_t i = 1; i < pts_.size(); ++i) {
      cum_[i] = cum_[i - 1] + (pts_[i] - pts_[i - 1]).norm();
    }
  }

  double length() const { return cum_.back(); }

  Vec2 point_at(double s) const {
    const auto [i, t] = locate(s);
    return pts_[i] + (pts_[i + 1] - pts_[i]) * t;
  }

  Vec2 tangent_at(double s) const {
    const auto [i, t] = locate(s);
    (void)t;
    Vec2 d = pts_[i + 1] - pts_[i];
    const double n = d.norm();
    return n > 0.0 ? d * (1.0 / n) : Vec2{1.0, 0.0};
  }

  // Arc length of the vertex closest to p.
  double nearest_s(Vec2 p) const {
    double best = 0.0;
    double best_d = (pts_[0] - p).norm();
    for (std::size_t i = 1; i < pts_.size(); ++i) {
      const double d = (pts_[i] - p).norm();
      if (d < best_d) {
        best_d = d;
        best = cum_[i];
      }
    }
    return best;
  }

 private:
  std::pair<std::size_t, double> locate(double s) const {
    const double sc = std::clamp(s, 0.0, length());
    auto it = std::upper_bound(cum_.begin(), cum_.end(), sc);
    std::size_t i = static_cast<std::size_t>(it - cum_.begin());
    i = std::min(std::max<std::size_t>(i, 1), cum_.size() - 1) - 1;
    const double seg = cum_[i + 1] - cum_[i];
    const double t = seg > 0.0 ? (sc - cum_[i]) / seg : 0.0;
    return {i, t};
  }

  std::vector<Vec2> pts_;
  std::vector<double> cum_;
};

struct SceneBuilder {
  Scene scene;
  int next_element_id = 1;
  int next_agent_id = 1;

  void add_element(ElementClass cls, std::vector<Vec2> pts) {
    scene.elements.push_back({next_element_id++, cls, std::move(pts)});
  }

  /// Samples a full track (history + future) by marching along `route` at
  /// speed v, with a constant lateral offset plus a gentle sway. The t = 0
  /// sample is the last history point.
  void add_agent(const ArcLengthPath& route, double s0, double v,
                 double lateral, double sway_phase) {
    Agent agent;
    agent.history.agent_id = next_agent_id;
    agent.future.agent_id = next_agent_id;
    const int total = kHistorySteps + kFutureSteps;
    for (int k = 0; k < total; ++k) {
      const double t = (k - (kHistorySteps - 1)) * kStepSeconds;
      const double s = s0 + v * t;
      const Vec2 tangent = route.tangent_at(s);
      const Vec2 normal{-tangent.y, tangent.x};
      const double d = lateral + 0.15 * std::sin(0.8 * t + sway_phase);
      const Vec2 p = route.point_at(s) + normal * d;
      if (k < kHistorySteps) {
        agent.history.samples.push_back(p);
      } else {
        agent.future.samples.push_back(p);
      }
    }
    scene.agents.push_back(std::move(agent));
    ++next_agent_id;
  }
};

// Picks a start arc length so the whole 5 s track stays on the route and the
// t = 0 position lands near the requested anchor.
double pick_start_s(const ArcLengthPath& route, double v, double anchor_s,
                    Rng& rng) {
  const double back = v * (kHistorySteps - 1) * kStepSeconds + 1.0;
  const double fwd = v * kFutureSteps * kStepSeconds + 1.0;
  const double lo = back;
  const double hi = route.length() - fwd;
  if (hi <= lo) {
    throw std::invalid_argument("route too short for requested speed");
  }
  return std::clamp(anchor_s + rng.uniform(-8.0, 8.0), lo, hi);
}

void build_lane_elements(SceneBuilder& b, const std::vector<Vec2>& spine,
                         double half_width, double lane_half) {
  auto offset_polyline = [&](double d) {
    std::vector<Vec2> out;
    out.reserve(spine.size());
    for (std::size_t i = 0; i < spine.size(); ++i) {
      const std::size_t j0 = i == 0 ? 0 : i - 1;
      const std::size_t j1 = i + 1 < spine.size() ? i + 1 : i;
      Vec2 t = spine[j1] - spine[j0];
      const double n = t.norm();
      t = n > 0.0 ? t * (1.0 / n) : Vec2{1.0, 0.0};
      out.push_back(spine[i] + Vec2{-t.y, t.x} * d);
    }
    return out;
  };
  b.add_element(ElementClass::kBoundary, offset_polyline(half_width));
  b.add_element(ElementClass::kBoundary, offset_polyline(-half_width));
  b.add_element(ElementClass::kDivider, offset_polyline(0.0));
  b.add_element(ElementClass::kCenterline, offset_polyline(-lane_half));
  b.add_element(ElementClass::kCenterline, offset_polyline(lane_half));
}

Scene build_straight(Rng& rng) {
  SceneBuilder b;
  const double lane_half = rng.uniform(3.2, 3.8) / 2.0 + 1.0;
  const double half_width = 2.0 * lane_half;
  const double y0 = rng.uniform(-2.5, 2.5);
  const double tilt = rng.uniform(-0.12, 0.12);

  std::vector<Vec2> spine;
  for (double x = -48.0; x <= 48.0 + 1e-9; x += 2.5) {
    spine.push_back({x, y0 + tilt * x});
  }
  build_lane_elements(b, spine, half_width, lane_half);

  auto offset_route = [&](double d) {
    std::vector<Vec2> pts;
    for (const Vec2& p : spine) {
      Vec2 t{1.0, tilt};
      t = t * (1.0 / t.norm());
      pts.push_back(p + Vec2{-t.y, t.x} * d);
    }
    return pts;
  };
  ArcLengthPath east(offset_route(-lane_half));
  std::vector<Vec2> west_pts = offset_route(lane_half);
  std::reverse(west_pts.begin(), west_pts.end());
  ArcLengthPath west(west_pts);

  const int n_agents = 2 + static_cast<int>(rng.uniform01() * 2.0);
  for (int i = 0; i < n_agents; ++i) {
    const ArcLengthPath& route = (i % 2 == 0) ? east : west;
    const double v = rng.uniform(4.0, 12.0);
    const double anchor = route.nearest_s({0.0, 0.0});
    const double s0 = pick_start_s(route, v, anchor, rng);
    b.add_agent(route, s0, v, rng.uniform(-0.5, 0.5), rng.uniform(0.0, 6.28));
  }
  return b.scene;
}

Scene build_curve(Rng& rng) {
  SceneBuilder b;
  const double lane_half = rng.uniform(3.3, 3.8) / 2.0 + 1.0;
  const double half_width = 2.0 * lane_half;
  const double radius = rng.uniform(38.0, 70.0);
  const double side = rng.uniform01() < 0.5 ? 1.0 : -1.0;  // curve direction
  const Vec2 center{0.0, side * radius};

  // Angular half-span giving ~55 m of arc on each side of the ego.
  const double span = std::min(1.35, 55.0 / radius);
  const double a_center = side > 0.0 ? -kPi / 2.0 : kPi / 2.0;

  auto ring = [&](double r_offset) {
    const double r = radius + r_offset;
    const double a0 = a_center - side * span;
    const double a1 = a_center + side * span;
    return sample_arc(center, r, a0, a1, 2.5);
  };
  b.add_element(ElementClass::kBoundary, ring(half_width));
  b.add_element(ElementClass::kBoundary, ring(-half_width));
  b.add_element(ElementClass::kDivider, ring(0.0));
  b.add_element(ElementClass::kCenterline, ring(-lane_half));
  b.add_element(ElementClass::kCenterline, ring(lane_half));

  ArcLengthPath inner(ring(-lane_half));
  std::vector<Vec2> outer_pts = ring(lane_half);
  std::reverse(outer_pts.begin(), outer_pts.end());
  ArcLengthPath outer(outer_pts);

  const int n_agents = 2 + static_cast<int>(rng.uniform01() * 2.0);
  for (int i = 0; i < n_agents; ++i) {
    const ArcLengthPath& route = (i % 2 == 0) ? inner : outer;
    const double v = rng.uniform(3.5, 10.0);
    const double anchor = route.nearest_s({0.0, 0.0});
    const double s0 = pick_start_s(route, v, anchor, rng);
    b.add_agent(route, s0, v, rng.uniform(-0.5, 0.5), rng.uniform(0.0, 6.28));
  }
  return b.scene;
}

Scene build_intersection(Rng& rng) {
  SceneBuilder b;
  const double lane = 3.5;
  const double hw = 2.0 * lane;  // road half width = 7 m
  const double reach = 48.0;

  // Four L-shaped corner boundaries.
  auto corner = [&](double sx, double sy) {
    std::vector<Vec2> pts = sample_segment({sx * reach, sy * hw},
                                           {sx * hw, sy * hw}, 2.5);
    std::vector<Vec2> leg = sample_segment({sx * hw, sy * hw},
                                           {sx * hw, sy * reach}, 2.5);
    pts.insert(pts.end(), leg.begin() + 1, leg.end());
    return pts;
  };
  for (const auto [sx, sy] :
       {std::pair{1.0, 1.0}, {-1.0, 1.0}, {-1.0, -1.0}, {1.0, -1.0}}) {
    b.add_element(ElementClass::kBoundary, corner(sx, sy));
  }

  // Median dividers on each approach, stopping at the junction box.
  b.add_element(ElementClass::kDivider,
                sample_segment({-reach, 0.0}, {-hw, 0.0}, 2.5));
  b.add_element(ElementClass::kDivider,
                sample_segment({hw, 0.0}, {reach, 0.0}, 2.5));
  b.add_element(ElementClass::kDivider,
                sample_segment({0.0, -reach}, {0.0, -hw}, 2.5));
  b.add_element(ElementClass::kDivider,
                sample_segment({0.0, hw}, {0.0, reach}, 2.5));

  // Pedestrian crossings across each approach, just outside the box.
  const double cx = hw + 2.0;
  b.add_element(ElementClass::kPedCrossing,
                sample_segment({cx, -hw}, {cx, hw}, 1.5));
  b.add_element(ElementClass::kPedCrossing,
                sample_segment({-cx, -hw}, {-cx, hw}, 1.5));
  b.add_element(ElementClass::kPedCrossing,
                sample_segment({-hw, cx}, {hw, cx}, 1.5));
  b.add_element(ElementClass::kPedCrossing,
                sample_segment({-hw, -cx}, {hw, -cx}, 1.5));

  // Through centerlines (right-hand traffic).
  std::vector<Vec2> east = sample_segment({-reach, -lane}, {reach, -lane}, 2.5);
  std::vector<Vec2> west = sample_segment({reach, lane}, {-reach, lane}, 2.5);
  std::vector<Vec2> north = sample_segment({lane, -reach}, {lane, reach}, 2.5);
  std::vector<Vec2> south = sample_segment({-lane, reach}, {-lane, -reach}, 2.5);
  b.add_element(ElementClass::kCenterline, east);
  b.add_element(ElementClass::kCenterline, west);
  b.add_element(ElementClass::kCenterline, north);
  b.add_element(ElementClass::kCenterline, south);

  // Turn centerlines: eastbound right (to southbound) and left (to
  // northbound). These give the predictor genuinely multimodal context.
  std::vector<Vec2> right_turn = sample_segment({-reach, -lane}, {-hw, -lane}, 2.5);
  {
    std::vector<Vec2> arc = sample_arc({-hw, -hw}, hw - lane, kPi / 2.0, 0.0, 1.5);
    right_turn.insert(right_turn.end(), arc.begin() + 1, arc.end());
    std::vector<Vec2> out = sample_segment({-lane, -hw}, {-lane, -reach}, 2.5);
    right_turn.insert(right_turn.end(), out.begin() + 1, out.end());
  }
  std::vector<Vec2> left_turn = sample_segment({-reach, -lane}, {-hw, -lane}, 2.5);
  {
    std::vector<Vec2> arc =
        sample_arc({-hw, hw}, hw + lane, -kPi / 2.0, 0.0, 1.5);
    left_turn.insert(left_turn.end(), arc.begin() + 1, arc.end());
    std::vector<Vec2> out = sample_segment({lane, hw}, {lane, reach}, 2.5);
    left_turn.insert(left_turn.end(), out.begin() + 1, out.end());
  }
  b.add_element(ElementClass::kCenterline, right_turn);
  b.add_element(ElementClass::kCenterline, left_turn);

  std::vector<ArcLengthPath> routes;
  routes.emplace_back(east);
  routes.emplace_back(west);
  routes.emplace_back(north);
  routes.emplace_back(south);
  routes.emplace_back(right_turn);
  routes.emplace_back(left_turn);

  const int n_agents = 3 + static_cast<int>(rng.uniform01() * 2.0);
  for (int i = 0; i < n_agents; ++i) {
    const std::size_t ri = rng.categorical(
        std::vector<double>(routes.size(), 1.0 / routes.size()));
    const ArcLengthPath& route = routes[ri];
    const double v = rng.uniform(3.0, 9.0);
    const double anchor = route.nearest_s({0.0, 0.0});
    const double s0 = pick_start_s(route, v, anchor, rng);
    b.add_agent(route, s0, v, rng.uniform(-0.4, 0.4), rng.uniform(0.0, 6.28));
  }
  return b.scene;
}

Scene build_parking(Rng& rng) {
  SceneBuilder b;
  const double x0 = -24.0 + rng.uniform(-2.0, 2.0);
  const double x1 = 26.0 + rng.uniform(-2.0, 2.0);
  const double y_top = 11.0;
  const double y_bot = -13.0;

  // Lot boundary split into two polylines (south rim and north rim + sides).
  b.add_element(ElementClass::kBoundary,
                sample_segment({x0, y_bot}, {x1, y_bot}, 2.5));
  {
    std::vector<Vec2> north = sample_segment({x0, y_bot}, {x0, y_top}, 2.5);
    std::vector<Vec2> top = sample_segment({x0, y_top}, {x1, y_top}, 2.5);
    std::vector<Vec2> east = sample_segment({x1, y_top}, {x1, y_bot}, 2.5);
    north.insert(north.end(), top.begin() + 1, top.end());
    north.insert(north.end(), east.begin() + 1, east.end());
    b.add_element(ElementClass::kBoundary, north);
  }

  // Stall dividers, perpendicular rows on both sides of the access lane.
  const int n_rows = 5 + static_cast<int>(rng.uniform01() * 3.0);
  const double pitch = (x1 - x0 - 8.0) / (n_rows + 1);
  for (int i = 1; i <= n_rows; ++i) {
    const double x = x0 + 4.0 + pitch * i;
    b.add_element(ElementClass::kDivider,
                  sample_segment({x, y_bot + 1.0}, {x, -4.0}, 1.5));
    b.add_element(ElementClass::kDivider,
                  sample_segment({x, 4.0}, {x, y_top - 1.0}, 1.5));
  }

  // Access lane runs the length of the lot and out both ends.
  std::vector<Vec2> lane =
      sample_segment({-48.0, 0.0}, {48.0, 0.0}, 2.5);
  b.add_element(ElementClass::kCenterline, lane);
  ArcLengthPath route{lane};
  std::vector<Vec2> rev = lane;
  std::reverse(rev.begin(), rev.end());
  ArcLengthPath route_rev{rev};

  const int n_agents = 2 + static_cast<int>(rng.uniform01() * 2.0);
  for (int i = 0; i < n_agents; ++i) {
    const ArcLengthPath& r = (i % 2 == 0) ? route : route_rev;
    const double v = rng.uniform(2.0, 5.0);  // lot traffic is slow
    const double anchor = r.nearest_s({0.0, 0.0});
    const double s0 = pick_start_s(r, v, anchor, rng);
    b.add_agent(r, s0, v, rng.uniform(-0.6, 0.6), rng.uniform(0.0, 6.28));
  }
  return b.scene;
}

}  // namespace

const char* layout_name(Layout layout) {
  switch (layout) {
    case Layout::kStraight:
      return "straight";
    case Layout::kCurve:
      return "curve";
    case Layout::kIntersection:
      return "intersection";
    case Layout::kParking:
      return "parking";
  }
  throw std::invalid_argument("invalid layout value");
}

Layout layout_from_name(const std::string& name) {
  if (name == "straight") return Layout::kStraight;
  if (name == "curve") return Layout::kCurve;
  if (name == "intersection") return Layout::kIntersection;
  if (name == "parking") return Layout::kParking;
  throw std::invalid_argument("unknown layout tag: " + name);
}

Scene generate_scene(Layout layout, std::uint64_t seed) {
  Rng rng(seed);
  Scene scene;
  switch (layout) {
    case Layout::kStraight:
      scene = build_straight(rng);
      break;
    case Layout::kCurve:
      scene = build_curve(rng);
      break;
    case Layout::kIntersection:
      scene = build_intersection(rng);
      break;
    case Layout::kParking:
      scene = build_parking(rng);
      break;
    default:
      throw std::invalid_argument("invalid layout value");
  }
  scene.seed = seed;
  scene.ego_pose = Pose2{{0.0, 0.0}, 0.0};
  return scene;
}

Scene generate_scene(const std::string& layout_tag, std::uint64_t seed) {
  return generate_scene(layout_from_name(layout_tag), seed);
}

}  // namespace uamap
