#include "uamap/geometry.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace uamap {

const char* class_name(ElementClass c) {
  switch (c) {
    case ElementClass::kBoundary:
      return "boundary";
    case ElementClass::kDivider:
      return "divider";
    case ElementClass::kPedCrossing:
      return "ped_crossing";
    case ElementClass::kCenterline:
      return "centerline";
  }
  throw std::invalid_argument("class_name: bad class value");
}

ElementClass class_from_name(const std::string& name) {
  if (name == "boundary") return ElementClass::kBoundary;
  if (name == "divider") return ElementClass::kDivider;
  if (name == "ped_crossing") return ElementClass::kPedCrossing;
  if (name == "centerline") return ElementClass::kCenterline;
  throw std::invalid_argument("class_from_name: unknown class '" + name + "'");
}

bool in_perception_box(const Vec2& p) {
  return std::abs(p.x) <= kPerceptionHalfX && std::abs(p.y) <= kPerceptionHalfY;
}

Vec2 normalize_to_bev(const Vec2& p, const Vec2& half_extents) {
  if (!(half_extents.x > 0.0) || !(half_extents.y > 0.0)) {
    throw std::invalid_argument("normalize_to_bev: half-extents must be strictly positive");
  }
  if (std::abs(p.x) > half_extents.x || std::abs(p.y) > half_extents.y) {
    throw std::domain_error("normalize_to_bev: point outside the perception box");
  }
  return {(p.x + half_extents.x) / (2.0 * half_extents.x),
          (p.y + half_extents.y) / (2.0 * half_extents.y)};
}

Vec2 denormalize_from_bev(const Vec2& n, const Vec2& half_extents) {
  if (!(half_extents.x > 0.0) || !(half_extents.y > 0.0)) {
    throw std::invalid_argument("denormalize_from_bev: half-extents must be strictly positive");
  }
  return {n.x * 2.0 * half_extents.x - half_extents.x,
          n.y * 2.0 * half_extents.y - half_extents.y};
}

std::vector<MapElement> clip_to_perception_range(std::span<const MapElement> elements) {
  std::vector<MapElement> out;
  out.reserve(elements.size());
  for (const auto& element : elements) {
    MapElement kept;
    kept.id = element.id;
    kept.cls = element.cls;
    for (const auto& p : element.points) {
      if (in_perception_box(p)) kept.points.push_back(p);
    }
    if (kept.points.size() >= 2) out.push_back(std::move(kept));
  }
  return out;
}

std::vector<Violation> validate_scene(const Scene& scene) {
  std::vector<Violation> out;
  std::set<int> ids;
  for (const auto& element : scene.elements) {
    if (!ids.insert(element.id).second) {
      out.push_back({"element", element.id, "duplicate element id"});
    }
    if (element.points.size() < 2) {
      out.push_back({"element", element.id, "polyline needs at least 2 points"});
    }
    for (const auto& p : element.points) {
      if (!p.finite()) {
        out.push_back({"element", element.id, "non-finite coordinate"});
        break;
      }
    }
  }
  for (const auto& agent : scene.agents) {
    const long long id = agent.history.agent_id;
    if (agent.future.agent_id != agent.history.agent_id) {
      out.push_back({"agent", id, "history/future agent id mismatch"});
    }
    if (agent.history.samples.size() != static_cast<std::size_t>(kHistorySteps)) {
      out.push_back({"agent", id,
                     "history has " + std::to_string(agent.history.samples.size()) +
                         " steps, expected " + std::to_string(kHistorySteps)});
    }
    if (agent.future.samples.size() != static_cast<std::size_t>(kFutureSteps)) {
      out.push_back({"agent", id,
                     "future has " + std::to_string(agent.future.samples.size()) +
                         " steps, expected " + std::to_string(kFutureSteps)});
    }
    for (const auto& track : {agent.history, agent.future}) {
      for (const auto& p : track.samples) {
        if (!p.finite()) {
          out.push_back({"agent", id, "non-finite trajectory sample"});
          break;
        }
      }
    }
  }
  if (!scene.ego_pose.position.finite() || !std::isfinite(scene.ego_pose.heading)) {
    out.push_back({"agent", -1, "non-finite ego pose"});
  }
  return out;
}

}  // namespace uamap
