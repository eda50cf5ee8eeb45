#ifndef UAMAP_GEOMETRY_HPP_
#define UAMAP_GEOMETRY_HPP_

#include <span>
#include <string>
#include <vector>

#include "uamap/types.hpp"

namespace uamap {

inline constexpr Vec2 kPerceptionHalfExtents{kPerceptionHalfX, kPerceptionHalfY};

/// True if p lies inside the perception box (boundary inclusive).
bool in_perception_box(const Vec2& p);

/// Affine map of the box [-hx, hx] x [-hy, hy] onto the unit square.
/// Throws std::invalid_argument for non-positive half-extents and
/// std::domain_error when p lies outside the box; callers clip first.
Vec2 normalize_to_bev(const Vec2& p, const Vec2& half_extents = kPerceptionHalfExtents);

/// Inverse of normalize_to_bev.
Vec2 denormalize_from_bev(const Vec2& n, const Vec2& half_extents = kPerceptionHalfExtents);

/// Restricts elements to the perception box. Each element keeps the ordered
/// subsequence of its in-box vertices (boundary crossings are truncated at
/// the last inside vertex, no interpolation); elements left with fewer than
/// two vertices are dropped. Element order and ids are preserved.
std::vector<MapElement> clip_to_perception_range(std::span<const MapElement> elements);

struct Violation {
  std::string subject;  // "element" or "agent"
  long long id = 0;
  std::string message;
};

/// Checks scene invariants (track lengths, finiteness, id uniqueness,
/// polyline sizes). Violations are data, not failures; an empty result
/// means the scene is well formed.
std::vector<Violation> validate_scene(const Scene& scene);

}  // namespace uamap

#endif  // UAMAP_GEOMETRY_HPP_
