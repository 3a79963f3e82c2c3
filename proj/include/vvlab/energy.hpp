#pragma once

// Time- and viscosity-weighted energy
//   Z^2 = sum_k (1+t)^(2(k-n)) Y_k^2 + sum_k (1+t)^(2(k-m)) U_k^2,  n = 2.5, m = 3,
// with Y_k = |grad^k W|_2, U_k = Theta(k) |grad^k visc|_2 and Theta(3) = eps^(1/2).

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "vvlab/errors.hpp"
#include "vvlab/grid.hpp"

namespace vvlab {

struct EnergyWeights {
  double n = 2.5;
  double m = 3.0;  // always n + 0.5

  double y_exponent(int k) const { return k - n; }
  double u_exponent(int k) const { return k - m; }
  static double theta(int k, double eps) { return k == 3 ? std::sqrt(eps) : 1.0; }
};

namespace detail {

inline void centered_diff(std::span<const double> f, const Grid& g, int axis, std::vector<double>& out) {
  out.assign(g.size(), 0.0);
  for (std::size_t c = 0; c < g.size(); ++c) {
    if (g.boundary == BoundaryMode::truncated) {
      const int i = g.coords(c)[axis];
      if (i == 0 || i == g.n[axis] - 1) continue;
    }
    out[c] = stencil::d1(f, g, c, axis);
  }
}

// Depth-first walk over all ordered multi-indices of length `remaining`.
inline double walk(std::span<const double> f, const Grid& g, int remaining, int order,
                   std::span<const double> weight, std::vector<std::vector<double>>& scratch) {
  if (remaining == 0) {
    double acc = 0.0;
    for (std::size_t c = 0; c < g.size(); ++c) {
      if (g.boundary_distance(c) < order) continue;
      const double w = weight.empty() ? 1.0 : weight[c];
      const double x = w * f[c];
      acc += x * x;
    }
    return acc;
  }
  double acc = 0.0;
  auto& buf = scratch[remaining - 1];
  for (int a = 0; a < g.dim; ++a) {
    centered_diff(f, g, a, buf);
    acc += walk(buf, g, remaining - 1, order, weight, scratch);
  }
  return acc;
}

}  // namespace detail

/// Squared discrete L2 norm of the full k-th derivative tensor of f, h^d sum
/// over nodes with a complete stencil. Derivatives are repeated centered
/// first differences. An optional nodal weight multiplies the derivative.
inline double derivative_norm_sq(std::span<const double> f, const Grid& g, int k,
                                 std::span<const double> weight = {}) {
  for (int a = 0; a < g.dim; ++a)
    if (g.n[a] < 2 * k + 1)
      throw PreconditionError("energy: grid too small for order-" + std::to_string(k) + " differences");
  std::vector<std::vector<double>> scratch(static_cast<std::size_t>(std::max(k, 1)));
  return detail::walk(f, g, k, k, weight, scratch) * g.cell_volume();
}

/// |grad^k W|_2^2 with W = (sound, v).
inline double w_norm_sq(const State& s, const Grid& g, int k) {
  double acc = derivative_norm_sq(s.sound(), g, k);
  for (int a = 0; a < g.dim; ++a) acc += derivative_norm_sq(s.vel(a), g, k);
  return acc;
}

struct EnergySnapshot {
  double t = 0.0;
  std::array<double, 4> Y{};
  std::array<double, 4> U{};
  double Z = 0.0;
};

inline EnergySnapshot compute_energy(const State& s, const Grid& g, double eps,
                                     const EnergyWeights& w = {}) {
  EnergySnapshot e;
  e.t = s.t;
  double z2 = 0.0;
  for (int k = 0; k <= 3; ++k) {
    e.Y[k] = std::sqrt(w_norm_sq(s, g, k));
    e.U[k] = EnergyWeights::theta(k, eps) * std::sqrt(derivative_norm_sq(s.visc(), g, k));
    z2 += std::pow(1.0 + s.t, 2.0 * w.y_exponent(k)) * e.Y[k] * e.Y[k];
    z2 += std::pow(1.0 + s.t, 2.0 * w.u_exponent(k)) * e.U[k] * e.U[k];
  }
  e.Z = std::sqrt(z2);
  return e;
}

/// eps sum_{k=0}^{3} (1+t)^(2(k-n)) |visc grad^(k+1) v|_2^2, the integrand of
/// the weighted dissipation.
inline double dissipation_rate(const State& s, const Grid& g, double eps,
                               const EnergyWeights& w = {}) {
  if (eps == 0.0) return 0.0;
  double acc = 0.0;
  for (int k = 0; k <= 3; ++k) {
    double term = 0.0;
    for (int a = 0; a < g.dim; ++a) term += derivative_norm_sq(s.vel(a), g, k + 1, s.visc());
    acc += std::pow(1.0 + s.t, 2.0 * w.y_exponent(k)) * term;
  }
  return eps * acc;
}

struct EnergyRecord {
  EnergySnapshot snap;
  double dissipation = 0.0;  // accumulated time integral
  double envelope = 0.0;     // C0 (1+t)^(-iota)
};

/// Observer for Solver::run: records energies and integrates the dissipation
/// by the trapezoid rule over observed times.
class EnergyMonitor {
 public:
  EnergyMonitor(const Grid& g, double eps, double iota, std::optional<double> envelope_constant = {})
      : grid_(g), eps_(eps), iota_(iota), c0_(envelope_constant) {}

  void operator()(const State& s) {
    EnergyRecord r;
    r.snap = compute_energy(s, grid_, eps_);
    const double rate = dissipation_rate(s, grid_, eps_);
    if (!records_.empty()) {
      const double dt = s.t - records_.back().snap.t;
      if (dt <= 0.0) return;  // duplicate observation of the same time
      accumulated_ += 0.5 * dt * (rate + last_rate_);
    }
    last_rate_ = rate;
    if (!c0_) c0_ = r.snap.Z;
    r.dissipation = accumulated_;
    r.envelope = *c0_ * std::pow(1.0 + s.t, -iota_);
    records_.push_back(r);
  }

  const std::vector<EnergyRecord>& records() const { return records_; }
  double iota() const { return iota_; }
  double envelope_constant() const { return c0_.value_or(0.0); }

 private:
  Grid grid_;
  double eps_;
  double iota_;
  std::optional<double> c0_;
  double accumulated_ = 0.0;
  double last_rate_ = 0.0;
  std::vector<EnergyRecord> records_;
};

struct DecayFit {
  double slope = 0.0;
  double constant = 0.0;      // exp(intercept)
  double sup_weighted = 0.0;  // sup_t (1+t)^exponent Z(t)
  double exponent = 0.0;      // exponent used for sup_weighted
  int used = 0;
  int excluded = 0;           // nonpositive Z samples dropped
};

/// Least squares of log Z against log(1+t). `exponent` defaults to -slope.
inline DecayFit fit_decay(std::span<const double> t, std::span<const double> z,
                          std::optional<double> exponent = {}) {
  if (t.size() != z.size()) throw PreconditionError("fit_decay: series length mismatch");
  DecayFit fit;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(z[i] > 0.0)) {
      ++fit.excluded;
      continue;
    }
    const double x = std::log1p(t[i]), y = std::log(z[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++fit.used;
  }
  if (fit.used < 5) throw FitError("fit_decay: fewer than 5 usable samples");
  const double n = fit.used;
  const double den = n * sxx - sx * sx;
  if (den <= 0.0) throw FitError("fit_decay: degenerate time samples");
  fit.slope = (n * sxy - sx * sy) / den;
  fit.constant = std::exp((sy - fit.slope * sx) / n);
  fit.exponent = exponent.value_or(-fit.slope);
  for (std::size_t i = 0; i < t.size(); ++i)
    if (z[i] > 0.0) fit.sup_weighted = std::max(fit.sup_weighted, std::pow(1.0 + t[i], fit.exponent) * z[i]);
  return fit;
}

}  // namespace vvlab
