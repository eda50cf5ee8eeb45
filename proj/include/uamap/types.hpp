#ifndef UAMAP_TYPES_HPP_
#define UAMAP_TYPES_HPP_

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace uamap {

// Fixed conventions shared by every module.
inline constexpr int kNumClasses = 4;
inline constexpr int kHistorySteps = 20;   // 2 s at 10 Hz
inline constexpr int kFutureSteps = 30;    // 3 s at 10 Hz
inline constexpr double kStepSeconds = 0.1;
inline constexpr double kPerceptionHalfX = 30.0;  // longitudinal half-extent, meters
inline constexpr double kPerceptionHalfY = 15.0;  // lateral half-extent, meters

/// Semantic class of a map element. The integer values are stable across
/// the toolkit and across serialization; do not reorder.
enum class ElementClass : int {
  kBoundary = 0,
  kDivider = 1,
  kPedCrossing = 2,
  kCenterline = 3,
};

/// Serialized name of a class ("boundary", "divider", ...).
const char* class_name(ElementClass c);

/// Inverse of class_name. Throws std::invalid_argument on unknown names.
ElementClass class_from_name(const std::string& name);

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double norm() const { return std::hypot(x, y); }
  bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

inline double distance(const Vec2& a, const Vec2& b) { return (a - b).norm(); }

/// A classed polyline in ego-centric BEV meters (x longitudinal, y lateral).
struct MapElement {
  int id = 0;
  ElementClass cls = ElementClass::kBoundary;
  std::vector<Vec2> points;  // ordered, size >= 2 for a valid element
};

/// Samples at 10 Hz. History tracks carry kHistorySteps points, futures
/// kFutureSteps; the last history sample is the current position.
struct Trajectory {
  int agent_id = 0;
  std::vector<Vec2> samples;
};

struct Agent {
  Trajectory history;
  Trajectory future;
};

struct Pose2 {
  Vec2 position;
  double heading = 0.0;  // radians, 0 along +x
};

struct Scene {
  std::vector<MapElement> elements;
  std::vector<Agent> agents;
  Pose2 ego_pose;
  std::uint64_t seed = 0;
};

using ClassScores = std::array<double, kNumClasses>;
using FutureTrack = std::array<Vec2, kFutureSteps>;
using HistoryTrack = std::array<Vec2, kHistorySteps>;

}  // namespace uamap

#endif  // UAMAP_TYPES_HPP_
