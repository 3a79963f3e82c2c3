#pragma once

// Model parameters of the degenerate-viscosity isentropic system and the
// exponents derived from them (M1..M4, eps*, eta*, b*, iota) together with
// the admissibility conditions P1..P4.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "vvlab/errors.hpp"

namespace vvlab {

struct ModelParameters {
  double gamma = 2.0;    // adiabatic exponent, > 1
  double delta = 3.0;    // viscosity power, > 1
  double alpha = 1.0;    // shear factor, > 0
  double beta = 0.0;     // bulk factor, 2 alpha + 3 beta >= 0
  double A = 1.0;        // pressure constant, > 0
  double epsilon = 1.0;  // viscosity scale in (0, 1]; 0 only for Euler runs
  double kappa = 1.0;    // spectral gap of grad u0, > 0

  /// Throws PreconditionError naming the first violated invariant.
  /// `allow_inviscid` admits epsilon == 0 (Euler mode).
  void validate(bool allow_inviscid = false) const {
    auto fail = [](const std::string& m) { throw PreconditionError("model parameters: " + m); };
    if (!(gamma > 1.0)) fail("gamma must exceed 1");
    if (!(delta > 1.0)) fail("delta must exceed 1");
    if (!(alpha > 0.0)) fail("alpha must be positive");
    if (!(2.0 * alpha + 3.0 * beta >= 0.0)) fail("2 alpha + 3 beta must be nonnegative");
    if (!(A > 0.0)) fail("A must be positive");
    if (allow_inviscid) {
      if (!(epsilon >= 0.0 && epsilon <= 1.0)) fail("epsilon must lie in [0, 1]");
    } else if (!(epsilon > 0.0 && epsilon <= 1.0)) {
      fail("epsilon must lie in (0, 1]");
    }
    if (!(kappa > 0.0)) fail("kappa must be positive");
  }
};

/// Which third arguments to use in eps* and eta*. `theorem` follows the
/// statement of the uniform estimate (1, 1/10); `proof` uses the values that
/// appear inside the ODE-inequality argument (1/10, 1/20).
enum class ConstantsVariant { theorem, proof };

struct DerivedConstants {
  double M1 = 0, M2 = 0, M3 = 0, M4 = 0;
  double eps_star = 0;
  double eta_star = 0;
  double b_star = 0;
  double iota = 0;
  double r = 0;       // exponent used for the lower-order pressure terms
  double d_star = 0;  // 3 delta / 2 - M3 / 4
  double n = 2.5;     // Y-weight offset
  double m = 3.0;     // U-weight offset, m = n + 1/2
};

inline DerivedConstants derive_constants(const ModelParameters& p,
                                         ConstantsVariant variant = ConstantsVariant::theorem) {
  const double lame = 2.0 * p.alpha + p.beta;
  if (lame == 0.0) throw std::domain_error("derive_constants: 2 alpha + beta vanishes");
  if (p.delta == 1.0) throw std::domain_error("derive_constants: delta == 1");

  DerivedConstants c;
  const double dm1 = p.delta - 1.0;
  c.M1 = (2.0 * p.alpha + 3.0 * p.beta) / lame;
  c.M3 = dm1 * dm1 / (4.0 * lame) + 4.0 * p.delta * p.delta * lame / (dm1 * dm1) * c.M1 * c.M1 +
         2.0 * c.M1 * p.delta;
  c.M2 = -3.0 * p.delta + 1.0 + 0.5 * c.M3;

  const double eps_cap = variant == ConstantsVariant::theorem ? 1.0 : 0.1;
  const double eta_cap = variant == ConstantsVariant::theorem ? 0.1 : 0.05;

  c.eps_star = 0.5 * std::min({(3.0 * p.gamma - 3.0) / 2.0, (-c.M2 - 1.0) / 2.0, eps_cap});
  c.M4 = c.eps_star + c.M2;
  c.eta_star = std::min({(3.0 * p.gamma - 3.0) / (4.0 * (3.0 * p.gamma - 1.0)),
                         (-c.M4 - 1.0) / (6.0 * p.delta - c.M3), eta_cap});
  c.d_star = 1.5 * p.delta - 0.25 * c.M3;
  if (p.gamma >= 5.0 / 3.0) {
    c.b_star = std::min(2.0, c.d_star);
    c.r = -0.5;
  } else {
    c.b_star = std::min(1.5 * p.gamma - 0.5, c.d_star);
    c.r = 1.5 * p.gamma - 3.0;
  }
  c.iota = (1.0 - c.eta_star) * c.b_star;
  return c;
}

struct ConditionSet {
  bool P1 = false, P2 = false, P3 = false, P4 = false;
  bool p1_feasible = false;  // necessary condition M1 < 3/2 - 1/delta

  bool admissible() const { return P1 || P2 || P3 || P4; }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    if (P1) out.emplace_back("P1");
    if (P2) out.emplace_back("P2");
    if (P3) out.emplace_back("P3");
    if (P4) out.emplace_back("P4");
    return out;
  }
};

// Comparisons are strict and untoleranced: the quantities are exact rational
// functions of the inputs.
inline ConditionSet check_conditions(const ModelParameters& p) {
  p.validate(/*allow_inviscid=*/true);
  const DerivedConstants c = derive_constants(p);
  ConditionSet s;
  const double m1_cap = 1.5 - 1.0 / p.delta;
  s.p1_feasible = c.M1 < m1_cap;
  s.P1 = c.M1 > 0.0 && c.M1 < m1_cap && c.M2 < -1.0;
  s.P2 = 2.0 * p.alpha + 3.0 * p.beta == 0.0;
  s.P3 = p.delta >= 2.0 * p.gamma - 1.0;
  s.P4 = p.delta == p.gamma;
  return s;
}

}  // namespace vvlab
