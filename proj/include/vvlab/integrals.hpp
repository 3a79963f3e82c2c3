#pragma once

// Elementary time integrals of powers of (1 + s), written so that each stays
// continuous through the exponent where its antiderivative turns logarithmic.

#include <cmath>
#include <limits>

namespace vvlab {

inline constexpr double kLogBranchTolerance = 1e-12;

/// ((1+t)^p - 1) / p, and ln(1+t) at p = 0. Nonnegative for t >= 0.
inline double power_growth(double p, double t) {
  const double L = std::log1p(t);
  if (std::abs(p) < kLogBranchTolerance) return L;
  return std::expm1(p * L) / p;
}

/// int_0^t (1+s)^p ds.
inline double power_integral(double p, double t) { return power_growth(p + 1.0, t); }

/// int_0^inf (1+s)^p ds; infinite unless p < -1.
inline double power_integral_infinite(double p) {
  return p < -1.0 ? -1.0 / (p + 1.0) : std::numeric_limits<double>::infinity();
}

/// int_0^t (1+s)^q ln(1+s) ds.
inline double power_log_integral(double q, double t) {
  const double L = std::log1p(t);
  const double r = q + 1.0;
  if (std::abs(r) < kLogBranchTolerance) return 0.5 * L * L;
  const double x = r * L;
  if (std::abs(x) < 0.5) {
    // int_0^L u e^{r u} du = L^2 sum_k x^k / (k! (k + 2)); the closed form cancels here
    double term = 1.0, sum = 0.5;
    for (int k = 1; k < 40 && std::abs(term) > 1e-18; ++k) {
      term *= x / k;
      sum += term / (k + 2);
    }
    return L * L * sum;
  }
  // (1+t)^r (L/r - 1/r^2) + 1/r^2
  return L / r * std::exp(x) - std::expm1(x) / (r * r);
}

/// int_0^t (1+s)^q power_growth(p, s) ds, continuous in p through 0.
inline double power_growth_integral(double q, double p, double t) {
  if (std::abs(p) < 1e-7) return power_log_integral(q, t);
  return (power_integral(q + p, t) - power_integral(q, t)) / p;
}

}  // namespace vvlab
