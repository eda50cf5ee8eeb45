#ifndef UAMAP_SELFCHECK_HPP_
#define UAMAP_SELFCHECK_HPP_

#include <cstdint>
#include <string>
#include <vector>

namespace uamap::selfcheck {

/// Independent numerical-integration oracle for the Laplace KL divergence:
/// integrates p ln(p/q) with adaptive Simpson quadrature, splitting at both
/// location kinks. Accurate to ~1e-9 absolute for b in [0.1, 5], |dmu| <= 10.
double laplace_kl_quadrature(double mu1, double b1, double mu2, double b2);

struct CheckResult {
  std::string name;
  bool passed = false;
  double observed = 0.0;   // the quantity compared against the tolerance
  double tolerance = 0.0;
  std::string detail;      // human-readable comparison description
};

struct VerifyOptions {
  std::uint64_t seed = 7;
  /// Test hook: negates the closed-form KL inside the suite so the harness
  /// can prove it detects failures.
  bool flip_kl_sign = false;
};

/// Oracle-agreement and property suites backing the `verify` subcommand:
/// KL closed form vs quadrature, KL non-negativity/identity, semantic fusion
/// exactness, prediction-difference norm axioms, and the two proportionality
/// checks (sigmoid correlation, linear-probe slope).
std::vector<CheckResult> run_verification(const VerifyOptions& options);

bool all_passed(const std::vector<CheckResult>& results);

/// One line per check with the tolerance actually used.
std::string format_report(const std::vector<CheckResult>& results);

}  // namespace uamap::selfcheck

#endif  // UAMAP_SELFCHECK_HPP_
