#include "uamap/uncertainty.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "uamap/rng.hpp"

namespace uamap {
namespace {

void require_scale(double b, const char* which) {
  if (!(b > 0.0) || !std::isfinite(b)) {
    throw std::domain_error(std::string("laplace_kl: ") + which + " scale must be positive and finite");
  }
}

double probe_value(ProbeKind kind, double t) {
  switch (kind) {
    case ProbeKind::kSigmoid:
      return 1.0 / (1.0 + std::exp(-t));
    case ProbeKind::kLinear:
      return t;
  }
  throw std::invalid_argument("probe_value: bad probe kind");
}

}  // namespace

double laplace_kl(double mu1, double b1, double mu2, double b2) {
  require_scale(b1, "first");
  require_scale(b2, "second");
  if (!std::isfinite(mu1) || !std::isfinite(mu2)) {
    throw std::domain_error("laplace_kl: locations must be finite");
  }
  const double d = std::abs(mu1 - mu2);
  return std::log(b2 / b1) + d / b2 + (b1 / b2) * std::exp(-d / b1) - 1.0;
}

PositionalUncertainty positional_uncertainty(const LaplacePoint& primary,
                                             const LaplacePoint& auxiliary) {
  const double kx = laplace_kl(primary.mu.x, primary.b.x, auxiliary.mu.x, auxiliary.b.x);
  const double ky = laplace_kl(primary.mu.y, primary.b.y, auxiliary.mu.y, auxiliary.b.y);
  return {kx + ky};
}

double positional_uncertainty_literal(const Vec2& mu, const Vec2& mu_aux) {
  const double components[2][2] = {{mu.x, mu_aux.x}, {mu.y, mu_aux.y}};
  double acc = 0.0;
  for (const auto& pair : components) {
    if (!(pair[0] > 0.0) || !(pair[1] > 0.0)) {
      throw std::domain_error(
          "positional_uncertainty_literal: defined only for strictly positive coordinates");
    }
    acc += pair[0] * std::log(pair[0] / pair[1]);
  }
  return acc / 2.0;
}

SemanticFusion semantic_fuse(const ClassScores& c, const ClassScores& c_aux) {
  for (const ClassScores* scores : {&c, &c_aux}) {
    double sum = 0.0;
    for (double v : *scores) {
      if (v < -1e-6 || !std::isfinite(v)) {
        throw std::domain_error("semantic_fuse: scores must be non-negative");
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      throw std::domain_error("semantic_fuse: scores must sum to one");
    }
  }
  SemanticFusion fusion;
  for (int i = 0; i < kNumClasses; ++i) {
    fusion.c_bar[i] = 0.5 * (c[i] + c_aux[i]);
    const double d = c[i] - c_aux[i];
    fusion.delta_c[i] = d * d;
  }
  return fusion;
}

double prediction_difference(std::span<const double> p_main, std::span<const double> p_aux,
                             Norm norm) {
  if (p_main.size() != p_aux.size()) {
    throw std::invalid_argument("prediction_difference: length mismatch");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < p_main.size(); ++i) {
    const double d = p_main[i] - p_aux[i];
    acc += norm == Norm::kL1 ? std::abs(d) : d * d;
  }
  return norm == Norm::kL1 ? acc : std::sqrt(acc);
}

ProportionalityResult verify_proportionality(const ProportionalityConfig& config) {
  const auto& grid = config.sigma_grid;
  if (grid.size() < 4) {
    throw std::invalid_argument("verify_proportionality: sigma grid needs >= 4 points");
  }
  if (config.n_samples < 10000) {
    throw std::invalid_argument("verify_proportionality: n_samples must be >= 10^4");
  }
  bool all_equal = true;
  for (double s : grid) {
    if (s < 0.0) throw std::invalid_argument("verify_proportionality: sigma must be >= 0");
    if (s != grid.front()) all_equal = false;
  }
  if (all_equal) {
    throw std::invalid_argument("verify_proportionality: degenerate grid (all sigma equal)");
  }

  ProportionalityResult result;
  result.sigma = grid;
  result.mean_diff.resize(grid.size(), 0.0);
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    Rng rng(derive_seed(config.seed, gi));
    const double sigma = grid[gi];
    double acc = 0.0;
    for (std::size_t s = 0; s < config.n_samples; ++s) {
      const double theta_main = rng.normal(config.theta0, sigma);
      const double theta_aux = rng.normal(config.theta0, sigma);
      const double p_main = probe_value(config.probe, theta_main * config.input_x);
      const double p_aux = probe_value(config.probe, theta_aux * config.input_x);
      acc += std::abs(p_main - p_aux);
    }
    result.mean_diff[gi] = acc / static_cast<double>(config.n_samples);
  }

  // Least squares of mean_diff against sigma, plus the Pearson correlation.
  const double n = static_cast<double>(grid.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    sx += result.sigma[i];
    sy += result.mean_diff[i];
    sxx += result.sigma[i] * result.sigma[i];
    sxy += result.sigma[i] * result.mean_diff[i];
    syy += result.mean_diff[i] * result.mean_diff[i];
  }
  const double var_x = sxx - sx * sx / n;
  const double cov = sxy - sx * sy / n;
  const double var_y = syy - sy * sy / n;
  result.slope = cov / var_x;
  result.intercept = (sy - result.slope * sx) / n;
  result.correlation = var_y > 0.0 ? cov / std::sqrt(var_x * var_y) : 0.0;
  return result;
}

void write_proportionality_csv(const ProportionalityResult& result, std::ostream& os) {
  os << "sigma,mean_diff\n";
  char line[80];
  for (std::size_t i = 0; i < result.sigma.size(); ++i) {
    std::snprintf(line, sizeof(line), "%.17g,%.17g\n", result.sigma[i], result.mean_diff[i]);
    os << line;
  }
}

}  // namespace uamap
