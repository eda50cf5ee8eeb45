#include "uamap/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "uamap/rng.hpp"
#include "uamap/uncertainty.hpp"

namespace uamap::selfcheck {
namespace {

double laplace_log_pdf(double x, double mu, double b) {
  return -std::log(2.0 * b) - std::abs(x - mu) / b;
}

double kl_integrand(double x, double mu1, double b1, double mu2, double b2) {
  const double lp = laplace_log_pdf(x, mu1, b1);
  const double lq = laplace_log_pdf(x, mu2, b2);
  return std::exp(lp) * (lp - lq);
}

double simpson(double fa, double fm, double fb, double a, double b) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_simpson(double a, double b, double fa, double fm, double fb,
                        double whole, double tol, int depth, double mu1,
                        double b1, double mu2, double b2) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = kl_integrand(lm, mu1, b1, mu2, b2);
  const double frm = kl_integrand(rm, mu1, b1, mu2, b2);
  const double left = simpson(fa, flm, fm, a, m);
  const double right = simpson(fm, frm, fb, m, b);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return adaptive_simpson(a, m, fa, flm, fm, left, tol * 0.5, depth - 1, mu1,
                          b1, mu2, b2) +
         adaptive_simpson(m, b, fm, frm, fb, right, tol * 0.5, depth - 1, mu1,
                          b1, mu2, b2);
}

double integrate_segment(double a, double b, double mu1, double b1, double mu2,
                         double b2) {
  if (!(b > a)) return 0.0;
  const double fa = kl_integrand(a, mu1, b1, mu2, b2);
  const double fb = kl_integrand(b, mu1, b1, mu2, b2);
  const double fm = kl_integrand(0.5 * (a + b), mu1, b1, mu2, b2);
  const double whole = simpson(fa, fm, fb, a, b);
  return adaptive_simpson(a, b, fa, fm, fb, whole, 1e-12, 48, mu1, b1, mu2, b2);
}

struct SuiteBuilder {
  std::vector<CheckResult> results;

  void add(const std::string& name, bool passed, double observed,
           double tolerance, std::string detail) {
    results.push_back({name, passed, observed, tolerance, std::move(detail)});
  }
};

std::string describe(const char* fmt, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), fmt, a, b);
  return buf;
}

}  // namespace

double laplace_kl_quadrature(double mu1, double b1, double mu2, double b2) {
  // Integration domain covers the p tails far past double precision, split
  // at the two kinks so each piece is smooth.
  const double reach = 60.0 * b1;
  double lo = mu1 - reach;
  double hi = mu1 + reach;
  lo = std::min(lo, mu2 - 1.0);
  hi = std::max(hi, mu2 + 1.0);
  const double k0 = std::min(mu1, mu2);
  const double k1 = std::max(mu1, mu2);
  double total = 0.0;
  total += integrate_segment(lo, k0, mu1, b1, mu2, b2);
  total += integrate_segment(k0, k1, mu1, b1, mu2, b2);
  total += integrate_segment(k1, hi, mu1, b1, mu2, b2);
  return total;
}

std::vector<CheckResult> run_verification(const VerifyOptions& options) {
  SuiteBuilder suite;
  const double sign = options.flip_kl_sign ? -1.0 : 1.0;
  auto closed_kl = [&](double mu1, double b1, double mu2, double b2) {
    return sign * laplace_kl(mu1, b1, mu2, b2);
  };

  {
    Rng rng(derive_seed(options.seed, 1));
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
      const double b1 = rng.uniform(0.1, 5.0);
      const double b2 = rng.uniform(0.1, 5.0);
      const double mu1 = rng.uniform(-5.0, 5.0);
      const double mu2 = mu1 + rng.uniform(-10.0, 10.0);
      const double gap = std::abs(closed_kl(mu1, b1, mu2, b2) -
                                  laplace_kl_quadrature(mu1, b1, mu2, b2));
      worst = std::max(worst, gap);
    }
    suite.add("laplace_kl_oracle_agreement", worst < 1e-6, worst, 1e-6,
              describe("max |closed form - quadrature| = %.3g over 200 random "
                       "pairs (tolerance %.1g)",
                       worst, 1e-6));
  }

  {
    Rng rng(derive_seed(options.seed, 2));
    double most_negative = 0.0;
    bool finite = true;
    for (int i = 0; i < 1000; ++i) {
      const double v = closed_kl(rng.uniform(-10.0, 10.0), rng.uniform(0.1, 5.0),
                                 rng.uniform(-10.0, 10.0), rng.uniform(0.1, 5.0));
      most_negative = std::min(most_negative, v);
      finite = finite && std::isfinite(v);
    }
    double worst_identity = 0.0;
    for (int i = 0; i < 100; ++i) {
      const double mu = rng.uniform(-10.0, 10.0);
      const double b = rng.uniform(0.1, 5.0);
      worst_identity = std::max(worst_identity, std::abs(closed_kl(mu, b, mu, b)));
    }
    const bool ok = finite && most_negative >= 0.0 && worst_identity == 0.0;
    suite.add("laplace_kl_nonnegativity_identity", ok,
              std::min(most_negative, -worst_identity), 0.0,
              describe("min KL over 1000 random pairs = %.3g; max |KL| over "
                       "100 identical pairs = %.3g (both must be exactly >= 0 "
                       "and == 0)",
                       most_negative, worst_identity));
  }

  {
    Rng rng(derive_seed(options.seed, 3));
    auto random_simplex = [&]() {
      ClassScores c{};
      double sum = 0.0;
      for (double& v : c) {
        v = -std::log(std::max(rng.uniform01(), 1e-300));
        sum += v;
      }
      for (double& v : c) v /= sum;
      return c;
    };
    double worst_sum = 0.0;
    double worst_range = 0.0;
    double worst_agreement = 0.0;
    for (int i = 0; i < 10000; ++i) {
      const ClassScores a = random_simplex();
      const ClassScores b = random_simplex();
      const SemanticFusion f = semantic_fuse(a, b);
      double s = 0.0;
      for (int j = 0; j < kNumClasses; ++j) {
        s += f.c_bar[j];
        worst_range = std::max(
            worst_range, std::max(-f.delta_c[j], f.delta_c[j] - 1.0));
      }
      worst_sum = std::max(worst_sum, std::abs(s - 1.0));
      const SemanticFusion same = semantic_fuse(a, a);
      for (int j = 0; j < kNumClasses; ++j) {
        worst_agreement = std::max(worst_agreement, std::abs(same.delta_c[j]));
      }
    }
    const bool ok =
        worst_sum < 1e-12 && worst_range <= 0.0 && worst_agreement == 0.0;
    suite.add("semantic_fusion_exactness", ok, worst_sum, 1e-12,
              describe("max |sum(c_bar) - 1| = %.3g over 10^4 pairs (tolerance "
                       "%.1g); delta_c stayed in [0,1]; agreement case exact",
                       worst_sum, 1e-12));
  }

  {
    Rng rng(derive_seed(options.seed, 4));
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      std::vector<double> a(8), b(8), c(8);
      for (int j = 0; j < 8; ++j) {
        a[j] = rng.uniform(-3.0, 3.0);
        b[j] = rng.uniform(-3.0, 3.0);
        c[j] = rng.uniform(-3.0, 3.0);
      }
      for (const Norm norm : {Norm::kL1, Norm::kL2}) {
        const double dab = prediction_difference(a, b, norm);
        const double dba = prediction_difference(b, a, norm);
        const double dac = prediction_difference(a, c, norm);
        const double dcb = prediction_difference(c, b, norm);
        worst = std::max(worst, std::abs(dab - dba));
        worst = std::max(worst, dab - (dac + dcb) > 0.0 ? dab - (dac + dcb) : 0.0);
        std::vector<double> a2(8), b2(8);
        const double lambda = rng.uniform(-2.0, 2.0);
        for (int j = 0; j < 8; ++j) {
          a2[j] = lambda * a[j];
          b2[j] = lambda * b[j];
        }
        const double scaled = prediction_difference(a2, b2, norm);
        worst = std::max(worst, std::abs(scaled - std::abs(lambda) * dab));
      }
    }
    suite.add("prediction_difference_norm_axioms", worst < 1e-9, worst, 1e-9,
              describe("max norm-axiom violation = %.3g over 1000 random "
                       "triples (tolerance %.1g)",
                       worst, 1e-9));
  }

  {
    ProportionalityConfig cfg;
    cfg.seed = derive_seed(options.seed, 5);
    const ProportionalityResult r = verify_proportionality(cfg);
    const bool ok = r.correlation > 0.99 && std::abs(r.intercept) < 0.02;
    suite.add("proportionality_sigmoid", ok, r.correlation, 0.99,
              describe("sigmoid probe correlation = %.6f (must exceed 0.99); "
                       "|intercept| = %.4f (must stay below 0.02)",
                       r.correlation, std::abs(r.intercept)));
  }

  {
    ProportionalityConfig cfg;
    cfg.probe = ProbeKind::kLinear;
    cfg.seed = derive_seed(options.seed, 6);
    const ProportionalityResult r = verify_proportionality(cfg);
    const double expected = 2.0 / std::sqrt(std::numbers::pi);
    const double rel = std::abs(r.slope - expected) / expected;
    suite.add("proportionality_linear_slope", rel < 0.02, rel, 0.02,
              describe("linear probe slope relative error vs 2/sqrt(pi) = "
                       "%.4f (tolerance %.2f)",
                       rel, 0.02));
  }

  return suite.results;
}

bool all_passed(const std::vector<CheckResult>& results) {
  return std::all_of(results.begin(), results.end(),
                     [](const CheckResult& r) { return r.passed; });
}

std::string format_report(const std::vector<CheckResult>& results) {
  std::string out;
  for (const CheckResult& r : results) {
    out += r.passed ? "[PASS] " : "[FAIL] ";
    out += r.name;
    out += ": ";
    out += r.detail;
    out += '\n';
  }
  out += all_passed(results) ? "all checks passed\n" : "CHECKS FAILED\n";
  return out;
}

}  // namespace uamap::selfcheck
