#ifndef UAMAP_SCENE_GEN_HPP_
#define UAMAP_SCENE_GEN_HPP_

#include <cstdint>
#include <string>

#include "uamap/types.hpp"

namespace uamap {

/// Synthetic scene archetypes. Each produces a ground-truth map (boundaries,
/// dividers, centerlines, and for intersections pedestrian crossings) plus
/// agents that travel along centerlines with small lateral offsets.
enum class Layout {
  kStraight,
  kCurve,
  kIntersection,
  kParking,
};

const char* layout_name(Layout layout);
Layout layout_from_name(const std::string& name);  // throws on unknown tags

/// Deterministic generator: identical (layout, seed) pairs yield identical
/// scenes. Agent speeds are drawn from [2, 12] m/s and tracks are sampled at
/// 10 Hz with kHistorySteps history and kFutureSteps future points.
Scene generate_scene(Layout layout, std::uint64_t seed);

Scene generate_scene(const std::string& layout_tag, std::uint64_t seed);

}  // namespace uamap

#endif  // UAMAP_SCENE_GEN_HPP_
