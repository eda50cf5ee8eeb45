#ifndef UAMAP_UNCERTAINTY_HPP_
#define UAMAP_UNCERTAINTY_HPP_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "uamap/types.hpp"

namespace uamap {

/// Per-vertex Laplace position parameters emitted by a regression head.
/// mu is a normalized BEV location, b the per-axis scale (strictly positive).
struct LaplacePoint {
  Vec2 mu;
  Vec2 b{1.0, 1.0};
};

/// Per-vertex positional uncertainty, in nats.
struct PositionalUncertainty {
  double beta = 0.0;
};

/// Mean class scores and their squared-difference uncertainty. c_bar lies on
/// the probability simplex; delta_c is componentwise in [0, 1] and does not
/// sum to one.
struct SemanticFusion {
  ClassScores c_bar{};
  ClassScores delta_c{};
};

/// KL divergence KL(Laplace(mu1, b1) || Laplace(mu2, b2)) in nats:
///   ln(b2/b1) + |mu1-mu2|/b2 + (b1/b2) * exp(-|mu1-mu2|/b1) - 1.
/// Non-negative, zero iff the parameters coincide. Throws std::domain_error
/// for non-positive or non-finite scales.
double laplace_kl(double mu1, double b1, double mu2, double b2);

/// Per-vertex positional uncertainty: the sum of the per-axis KL divergences
/// KL(primary || auxiliary), treating the two axes as independent.
PositionalUncertainty positional_uncertainty(const LaplacePoint& primary,
                                             const LaplacePoint& auxiliary);

/// Literal elementwise form mean(mu * ln(mu / mu_aux)), kept for comparison
/// only. Defined solely for strictly positive normalized coordinates; throws
/// std::domain_error otherwise.
double positional_uncertainty_literal(const Vec2& mu, const Vec2& mu_aux);

/// c_bar = (c + c_aux)/2, delta_c = (c - c_aux)^2, componentwise. Inputs must
/// lie on the simplex within 1e-6 (componentwise >= -1e-6, sum within 1e-6 of
/// one); worse violations raise std::domain_error.
SemanticFusion semantic_fuse(const ClassScores& c, const ClassScores& c_aux);

enum class Norm { kL1, kL2 };

/// Norm of (p_main - p_aux). Throws std::invalid_argument on length mismatch.
double prediction_difference(std::span<const double> p_main, std::span<const double> p_aux,
                             Norm norm = Norm::kL2);

// ---------------------------------------------------------------------------
// Monte-Carlo verifier: mean prediction difference of two i.i.d. perturbed
// parameter draws grows linearly with the parameter standard deviation.
// ---------------------------------------------------------------------------

enum class ProbeKind {
  kSigmoid,  // p(theta) = 1 / (1 + exp(-theta * x))
  kLinear,   // p(theta) = theta * x
};

struct ProportionalityConfig {
  ProbeKind probe = ProbeKind::kSigmoid;
  double theta0 = 0.0;   // center of the parameter law
  double input_x = 1.0;  // fixed scalar input
  std::vector<double> sigma_grid = {0.05, 0.1, 0.2, 0.4};
  std::size_t n_samples = 100000;
  std::uint64_t seed = 1;
};

struct ProportionalityResult {
  std::vector<double> sigma;
  std::vector<double> mean_diff;  // mean |p(theta_main) - p(theta_aux)| per sigma
  double slope = 0.0;             // least-squares fit of mean_diff against sigma
  double intercept = 0.0;
  double correlation = 0.0;  // Pearson r over the grid
};

/// For each sigma draws theta_main, theta_aux i.i.d. from N(theta0, sigma^2)
/// and averages the prediction difference over n_samples, then fits mean
/// difference against sigma. Deterministic for a fixed seed. Requires a grid
/// of >= 4 points that is not all-equal and n_samples >= 10^4.
ProportionalityResult verify_proportionality(const ProportionalityConfig& config);

/// Emits "sigma,mean_diff" rows (with a header line) for plotting.
void write_proportionality_csv(const ProportionalityResult& result, std::ostream& os);

}  // namespace uamap

#endif  // UAMAP_UNCERTAINTY_HPP_
