#ifndef UAMAP_NOISE_HPP_
#define UAMAP_NOISE_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "uamap/types.hpp"

namespace uamap {

/// Width of the per-vertex context vector fed to the map model:
/// noisy position (2) + offsets to surviving neighbours (4) + observed class
/// one-hot (4). All positional entries are in normalized BEV units.
inline constexpr int kContextWidth = 10;

enum class JitterKind {
  kLaplace,   // scale parameter pos_scale_b
  kGaussian,  // standard deviation pos_scale_b
};

/// Angular occlusion sector in ego frame, radians in [-pi, pi]. A sector may
/// wrap through +-pi (angle_start > angle_end).
struct OcclusionSector {
  double angle_start = 0.0;
  double angle_end = 0.0;
  double drop_prob = 0.0;
};

using ConfusionMatrix = std::array<std::array<double, kNumClasses>, kNumClasses>;

ConfusionMatrix identity_confusion();

/// Row-stochastic matrix with 1 - eps on the diagonal and eps split evenly
/// across the other classes.
ConfusionMatrix uniform_confusion(double eps);

struct NoiseConfig {
  double pos_scale_b = 0.2;  // meters
  JitterKind jitter = JitterKind::kLaplace;
  std::vector<OcclusionSector> occlusion_sectors;
  ConfusionMatrix confusion = identity_confusion();
  std::uint64_t seed = 1;
};

/// Field-level validation messages; empty means the config is usable.
std::vector<std::string> validate_noise_config(const NoiseConfig& config);

struct Observation {
  int element_id = 0;
  int vertex_index = 0;
  ElementClass true_class = ElementClass::kBoundary;
  ElementClass observed_class = ElementClass::kBoundary;
  Vec2 true_pos;   // normalized BEV
  Vec2 noisy_pos;  // normalized BEV
  std::array<double, kContextWidth> context{};
};

/// Clips the scene's elements to the perception box, then corrupts every
/// surviving vertex: positional jitter, angular occlusion drops, and class
/// confusion. The random stream consumes a fixed number of draws per vertex
/// (2 jitter + one per configured sector + 1 class), so output depends only
/// on the scene, the config, and the config seed.
std::vector<Observation> corrupt_observation(const Scene& scene,
                                             const NoiseConfig& config);

}  // namespace uamap

#endif  // UAMAP_NOISE_HPP_
