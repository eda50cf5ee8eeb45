#ifndef UAMAP_RENDER_HPP_
#define UAMAP_RENDER_HPP_

#include <span>
#include <string>

#include "uamap/dual_head.hpp"
#include "uamap/predictor.hpp"
#include "uamap/types.hpp"

namespace uamap {

/// Deterministic standalone SVG of a scene: ground-truth elements color-coded
/// by class (boundary green, ped-crossing blue, divider orange, centerline
/// gray), the ego marker in red, per-vertex uncertainty ellipses with radius
/// proportional to sqrt(beta), purple semantic bands with opacity
/// proportional to the max component of delta_c, and predicted modes per
/// agent. `predictions` must be empty or aligned with scene.agents; every
/// uncertain element id must exist in the scene.
std::string render_svg(const Scene& scene,
                       std::span<const UncertainMapElement> uncertain_elements,
                       std::span<const PredictionSet> predictions);

}  // namespace uamap

#endif  // UAMAP_RENDER_HPP_
