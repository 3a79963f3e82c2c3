#pragma once

// Comparison ODE
//   Z' + b/(1+t) Z = C1 (1+t)^D1 Z^a + C2 (1+t)^D2 Z,  Z(0) = Z0,
// solved through w = Z^(1-a):
//   Z = mu [Z0^(1-a) - (a-1) C1 I(t)]^(-1/(a-1)),  I(t) = int_0^t (1+s)^D1 mu^(a-1) ds,
//   mu(t) = (1+t)^(-b) exp(C2 int_0^t (1+s)^D2 ds).

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "vvlab/constants.hpp"
#include "vvlab/errors.hpp"
#include "vvlab/integrals.hpp"

namespace vvlab {

struct OdeParams {
  double a = 3.0;
  double b = 1.8;
  double C1 = 1.0;
  double C2 = 0.0;
  double D1 = 1.5;
  double D2 = -2.0;
  double Z0 = 0.5;

  void validate() const {
    if (!(a > 1.0)) throw PreconditionError("ode: a must exceed 1");
    if (!(C1 >= 0.0) || !(C2 >= 0.0)) throw PreconditionError("ode: C1 and C2 must be nonnegative");
    if (!(Z0 >= 0.0)) throw PreconditionError("ode: Z0 must be nonnegative");
    if (!std::isfinite(b) || !std::isfinite(D1) || !std::isfinite(D2))
      throw PreconditionError("ode: b, D1, D2 must be finite");
  }

  /// Instance produced by the energy argument: a = 3, b = iota, D1 = 1 + eps*, D2 = -1 - eps*.
  static OdeParams from_constants(const DerivedConstants& c, double C1, double C2, double Z0) {
    return {3.0, c.iota, C1, C2, 1.0 + c.eps_star, -1.0 - c.eps_star, Z0};
  }
};

class OdeSolution {
 public:
  explicit OdeSolution(OdeParams p) : p_(p) {
    p_.validate();
    const double e = p_.D1 - (p_.a - 1.0) * p_.b;
    const bool linear_finite = p_.C2 == 0.0 || p_.D2 < -1.0;
    tail_integrable_ = e < -1.0 && linear_finite;
    if (p_.C1 == 0.0) {
      lambda_ = std::numeric_limits<double>::infinity();
    } else if (!tail_integrable_) {
      lambda_ = 0.0;
    } else {
      lambda_ = std::pow((p_.a - 1.0) * p_.C1 * integral_to_infinity(), -1.0 / (p_.a - 1.0));
    }
    global_ = p_.Z0 == 0.0 || p_.C1 == 0.0 || (tail_integrable_ && p_.Z0 <= lambda_);
    if (!global_) t_star_ = locate_blowup();
  }

  const OdeParams& params() const { return p_; }
  bool global() const { return global_; }
  double lambda() const { return lambda_; }
  bool tail_integrable() const { return tail_integrable_; }
  std::optional<double> blowup_time() const { return t_star_; }

  double mu(double t) const {
    double m = std::pow(1.0 + t, -p_.b);
    if (p_.C2 != 0.0) m *= std::exp(p_.C2 * power_integral(p_.D2, t));
    return m;
  }

  /// I(t), closed form when C2 = 0 and by adaptive quadrature otherwise.
  double integral(double t) const {
    if (t <= 0.0) return 0.0;
    if (p_.C2 == 0.0) return power_integral(p_.D1 - (p_.a - 1.0) * p_.b, t);
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        [this](double s) { return integrand(s); }, 0.0, t, 15, 1e-13);
  }

  double bracket(double t) const {
    if (p_.Z0 == 0.0) return std::numeric_limits<double>::infinity();
    return std::pow(p_.Z0, 1.0 - p_.a) - (p_.a - 1.0) * p_.C1 * integral(t);
  }

  /// Closed-form Z(t); infinite at or past the blow-up time.
  double operator()(double t) const {
    if (t < 0.0) throw PreconditionError("ode: time must be nonnegative");
    if (p_.Z0 == 0.0) return 0.0;
    const double B = bracket(t);
    if (!(B > 0.0)) return std::numeric_limits<double>::infinity();
    return mu(t) * std::pow(B, -1.0 / (p_.a - 1.0));
  }

 private:
  double integrand(double s) const {
    return std::pow(1.0 + s, p_.D1) * std::pow(mu(s), p_.a - 1.0);
  }

  double integral_to_infinity() const {
    if (p_.C2 == 0.0) return power_integral_infinite(p_.D1 - (p_.a - 1.0) * p_.b);
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [this](double s) { return integrand(s); }, 0.0, std::numeric_limits<double>::infinity(), 20,
        1e-12);
  }

  double locate_blowup() const {
    double lo = 0.0, hi = 1.0;
    for (int i = 0; bracket(hi) > 0.0; ++i) {
      lo = hi;
      hi *= 2.0;
      if (i > 200) throw FitError("ode: failed to bracket the blow-up time");
    }
    while (hi - lo > 1e-10 * std::max(1.0, hi)) {
      const double mid = 0.5 * (lo + hi);
      (bracket(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }

  OdeParams p_;
  double lambda_ = 0.0;
  bool tail_integrable_ = false;
  bool global_ = true;
  std::optional<double> t_star_;
};

inline OdeSolution solve_closed_form(const OdeParams& p) { return OdeSolution(p); }

struct OdeTrajectory {
  std::vector<double> t;
  std::vector<double> z;
  bool blew_up = false;
  std::optional<double> blowup_time;  // first step end where Z crossed the threshold
};

/// Classical RK4 with a fixed step. Blow-up is declared when Z exceeds
/// `threshold` or turns non-finite.
inline OdeTrajectory solve_numeric(const OdeParams& p, double t_end, double dt, double threshold = 1e8) {
  p.validate();
  if (!(dt > 0.0)) throw PreconditionError("ode: dt must be positive");
  if (!(t_end >= 0.0)) throw PreconditionError("ode: t_end must be nonnegative");
  auto f = [&p](double t, double z) {
    const double zp = std::max(z, 0.0);
    return -p.b / (1.0 + t) * z + p.C1 * std::pow(1.0 + t, p.D1) * std::pow(zp, p.a) +
           p.C2 * std::pow(1.0 + t, p.D2) * z;
  };
  OdeTrajectory out;
  double t = 0.0, z = p.Z0;
  out.t.push_back(t);
  out.z.push_back(z);
  const long steps = static_cast<long>(std::ceil(t_end / dt - 1e-9));
  for (long k = 0; k < steps; ++k) {
    const double h = std::min(dt, t_end - t);
    const double k1 = f(t, z);
    const double k2 = f(t + 0.5 * h, z + 0.5 * h * k1);
    const double k3 = f(t + 0.5 * h, z + 0.5 * h * k2);
    const double k4 = f(t + h, z + h * k3);
    z += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t = k + 1 == steps ? t_end : t + h;
    out.t.push_back(t);
    out.z.push_back(z);
    if (!std::isfinite(z) || z > threshold) {
      out.blew_up = true;
      out.blowup_time = t;
      break;
    }
  }
  return out;
}

}  // namespace vvlab
