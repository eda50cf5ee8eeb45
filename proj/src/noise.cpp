#include "uamap/noise.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "uamap/geometry.hpp"
#include "uamap/rng.hpp"

namespace uamap {
namespace {

bool sector_contains(const OcclusionSector& sector, double angle) {
  if (sector.angle_start <= sector.angle_end) {
    return angle >= sector.angle_start && angle <= sector.angle_end;
  }
  // Wraps through +-pi.
  return angle >= sector.angle_start || angle <= sector.angle_end;
}

}  // namespace

ConfusionMatrix identity_confusion() {
  ConfusionMatrix m{};
  for (int i = 0; i < kNumClasses; ++i) m[i][i] = 1.0;
  return m;
}

ConfusionMatrix uniform_confusion(double eps) {
  if (!(eps >= 0.0 && eps <= 1.0)) {
    throw std::invalid_argument("confusion eps must be in [0, 1]");
  }
  ConfusionMatrix m{};
  const double off = eps / (kNumClasses - 1);
  for (int i = 0; i < kNumClasses; ++i) {
    for (int j = 0; j < kNumClasses; ++j) {
      m[i][j] = i == j ? 1.0 - eps : off;
    }
  }
  return m;
}

std::vector<std::string> validate_noise_config(const NoiseConfig& config) {
  std::vector<std::string> problems;
  if (!(config.pos_scale_b > 0.0) || !std::isfinite(config.pos_scale_b)) {
    problems.push_back("pos_scale_b: must be a finite positive number");
  }
  for (std::size_t i = 0; i < config.occlusion_sectors.size(); ++i) {
    const OcclusionSector& s = config.occlusion_sectors[i];
    char buf[128];
    if (!(s.drop_prob >= 0.0 && s.drop_prob <= 1.0)) {
      std::snprintf(buf, sizeof(buf),
                    "occlusion_sectors[%zu].drop_prob: must be in [0, 1]", i);
      problems.push_back(buf);
    }
    if (!std::isfinite(s.angle_start) || !std::isfinite(s.angle_end)) {
      std::snprintf(buf, sizeof(buf),
                    "occlusion_sectors[%zu]: angles must be finite", i);
      problems.push_back(buf);
    }
  }
  for (int i = 0; i < kNumClasses; ++i) {
    double row_sum = 0.0;
    bool negative = false;
    for (int j = 0; j < kNumClasses; ++j) {
      row_sum += config.confusion[i][j];
      if (config.confusion[i][j] < 0.0) negative = true;
    }
    char buf[128];
    if (negative) {
      std::snprintf(buf, sizeof(buf),
                    "confusion[%d]: entries must be non-negative", i);
      problems.push_back(buf);
    }
    if (std::abs(row_sum - 1.0) > 1e-9) {
      std::snprintf(buf, sizeof(buf),
                    "confusion[%d]: row sums to %.12g, expected 1", i, row_sum);
      problems.push_back(buf);
    }
  }
  return problems;
}

std::vector<Observation> corrupt_observation(const Scene& scene,
                                             const NoiseConfig& config) {
  const std::vector<std::string> problems = validate_noise_config(config);
  if (!problems.empty()) {
    throw std::invalid_argument("invalid noise config: " + problems.front());
  }

  const std::vector<MapElement> clipped = clip_to_perception_range(scene.elements);
  Rng rng(config.seed);

  std::vector<Observation> out;
  for (const MapElement& element : clipped) {
    const std::size_t n = element.points.size();
    std::vector<Vec2> noisy(n);
    std::vector<bool> kept(n, true);
    std::vector<ElementClass> observed(n, element.cls);

    // Fixed draw order per vertex: jitter x, jitter y, one occlusion uniform
    // per configured sector, one class uniform. Draws are consumed even when
    // unused so the stream shape never depends on outcomes.
    for (std::size_t v = 0; v < n; ++v) {
      const Vec2 p = element.points[v];
      double jx, jy;
      if (config.jitter == JitterKind::kLaplace) {
        jx = rng.laplace(config.pos_scale_b);
        jy = rng.laplace(config.pos_scale_b);
      } else {
        jx = rng.normal(0.0, config.pos_scale_b);
        jy = rng.normal(0.0, config.pos_scale_b);
      }
      const double angle = std::atan2(p.y - scene.ego_pose.position.y,
                                      p.x - scene.ego_pose.position.x);
      for (const OcclusionSector& sector : config.occlusion_sectors) {
        const double u = rng.uniform01();
        if (sector_contains(sector, angle) && u < sector.drop_prob) {
          kept[v] = false;
        }
      }
      const int row = static_cast<int>(element.cls);
      const std::vector<double> weights(config.confusion[row].begin(),
                                        config.confusion[row].end());
      observed[v] = static_cast<ElementClass>(rng.categorical(weights));

      Vec2 q{p.x + jx, p.y + jy};
      q.x = std::clamp(q.x, -kPerceptionHalfX, kPerceptionHalfX);
      q.y = std::clamp(q.y, -kPerceptionHalfY, kPerceptionHalfY);
      noisy[v] = normalize_to_bev(q);
    }

    for (std::size_t v = 0; v < n; ++v) {
      if (!kept[v]) continue;
      Observation obs;
      obs.element_id = element.id;
      obs.vertex_index = static_cast<int>(v);
      obs.true_class = element.cls;
      obs.observed_class = observed[v];
      obs.true_pos = normalize_to_bev(element.points[v]);
      obs.noisy_pos = noisy[v];

      obs.context[0] = noisy[v].x;
      obs.context[1] = noisy[v].y;
      // Offsets to surviving polyline neighbours; zero when the neighbour is
      // missing or occluded.
      if (v > 0 && kept[v - 1]) {
        obs.context[2] = noisy[v - 1].x - noisy[v].x;
        obs.context[3] = noisy[v - 1].y - noisy[v].y;
      }
      if (v + 1 < n && kept[v + 1]) {
        obs.context[4] = noisy[v + 1].x - noisy[v].x;
        obs.context[5] = noisy[v + 1].y - noisy[v].y;
      }
      obs.context[6 + static_cast<int>(observed[v])] = 1.0;
      out.push_back(obs);
    }
  }
  return out;
}

}  // namespace uamap
