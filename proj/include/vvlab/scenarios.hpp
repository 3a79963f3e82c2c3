#pragma once

// Admissible initial data: density profiles, the C^3 cutoff, construction of
// (sound, visc, v = 0) and the epsilon-indexed approximating density family.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "vvlab/background_flow.hpp"
#include "vvlab/constants.hpp"
#include "vvlab/energy.hpp"
#include "vvlab/errors.hpp"
#include "vvlab/grid.hpp"
#include "vvlab/solver.hpp"

namespace vvlab {

/// Septic smoothstep: C^3, S(0) = 0, S(1) = 1, first three derivatives vanish at both ends.
inline double smoothstep3(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double x4 = x * x * x * x;
  return std::clamp(x4 * (35.0 - x * (84.0 - x * (70.0 - 20.0 * x))), 0.0, 1.0);
}

/// Cutoff F: 1 on [0, 1], 0 on [2, inf), values in [0, 1].
inline double cutoff(double s) { return 1.0 - smoothstep3(s - 1.0); }

/// F_N(x) = F(|x| / N).
inline double cutoff_scaled(double r, double N) { return cutoff(r / N); }

enum class DensityKind { inverse_power, bump, gaussian, cusp };

inline std::string to_string(DensityKind k) {
  switch (k) {
    case DensityKind::inverse_power: return "inverse_power";
    case DensityKind::bump: return "bump";
    case DensityKind::gaussian: return "gaussian";
    case DensityKind::cusp: return "cusp";
  }
  return "bump";
}

inline DensityKind density_kind_from_string(const std::string& s) {
  if (s == "inverse_power") return DensityKind::inverse_power;
  if (s == "bump") return DensityKind::bump;
  if (s == "gaussian") return DensityKind::gaussian;
  if (s == "cusp") return DensityKind::cusp;
  throw ConfigError("unknown density kind '" + s + "'");
}

struct DensityProfile {
  DensityKind kind = DensityKind::bump;
  double amplitude = 0.01;  // nu_1
  double sigma = 3.5;       // sigma_1, sigma_2 or sigma_3 depending on kind
  double radius = 1.0;      // bump support radius
  double truncation = 0.0;  // N for non-compact kinds; 0 disables truncation

  /// Lower bound on sigma for this kind; gaussian has none.
  static std::optional<double> sigma_bound(DensityKind kind, const ModelParameters& p) {
    const double m = std::max(1.0 / (p.delta - 1.0), 1.0 / (p.gamma - 1.0));
    switch (kind) {
      case DensityKind::inverse_power: return 1.5 * m;
      case DensityKind::bump: return 3.0 * m;
      case DensityKind::cusp: return 1.5 * m + 0.5;
      case DensityKind::gaussian: return std::nullopt;
    }
    return std::nullopt;
  }

  void validate(const ModelParameters& p) const {
    if (!(amplitude >= 0.0)) throw PreconditionError("density: amplitude must be nonnegative");
    if (auto b = sigma_bound(kind, p); b && !(sigma > *b))
      throw PreconditionError("density: sigma=" + std::to_string(sigma) + " must exceed " +
                              std::to_string(*b) + " for kind " + to_string(kind));
    if (kind == DensityKind::bump && !(radius > 0.0))
      throw PreconditionError("density: bump radius must be positive");
    if (truncation < 0.0) throw PreconditionError("density: truncation radius must be nonnegative");
  }

  bool compact() const { return kind == DensityKind::bump || truncation > 0.0; }

  /// Radius outside which the (truncated) density vanishes; infinite if none.
  double support_radius() const {
    if (kind == DensityKind::bump) return truncation > 0.0 ? std::min(radius, 2.0 * truncation) : radius;
    return truncation > 0.0 ? 2.0 * truncation : std::numeric_limits<double>::infinity();
  }

  double density(double r, const ModelParameters& p) const {
    double rho = 0.0;
    switch (kind) {
      case DensityKind::inverse_power: rho = amplitude / std::pow(1.0 + r, 2.0 * sigma); break;
      case DensityKind::bump: {
        const double s = 1.0 - (r / radius) * (r / radius);
        rho = s > 0.0 ? amplitude * std::pow(s, 8.0 * sigma) : 0.0;  // g = (1 - r^2/R^2)_+^4
        break;
      }
      case DensityKind::gaussian: rho = amplitude * std::exp(-r * r); break;
      case DensityKind::cusp: rho = amplitude * r / std::pow(1.0 + r, 2.0 * sigma); break;
    }
    if (truncation > 0.0 && rho > 0.0) {
      // truncate rho itself so both powers stay tied to one density; the
      // exponent keeps each power at least linear in F
      const double pt = std::max(2.0 / (p.gamma - 1.0), 2.0 / (p.delta - 1.0));
      const double F = cutoff_scaled(r, truncation);
      rho = F > 0.0 ? rho * std::pow(F, pt) : 0.0;
    }
    return rho;
  }
};

/// Norms entering the small-data assumption, evaluated discretely.
struct InitialNorms {
  double sound_power_h3 = 0.0;   // ||rho^((gamma-1)/2)||_3
  double visc_power_h2 = 0.0;    // ||rho^((delta-1)/2)||_2
  double visc_power_d3 = 0.0;    // |grad^3 rho^((delta-1)/2)|_2 (without eps^(1/2))
  double total(double eps) const { return sound_power_h3 + visc_power_h2 + std::sqrt(eps) * visc_power_d3; }
};

struct InitialData {
  State state;
  std::vector<double> rho;
  InitialNorms norms;
  double support_radius = 0.0;
};

inline double sobolev_norm(std::span<const double> f, const Grid& g, int order) {
  double acc = 0.0;
  for (int k = 0; k <= order; ++k) acc += derivative_norm_sq(f, g, k);
  return std::sqrt(acc);
}

/// Fills sound, visc from a density field; v = 0.
inline InitialData initial_data_from_density(std::vector<double> rho, const Grid& g,
                                             const ModelParameters& p) {
  InitialData out;
  out.state = State(g, 0.0);
  const double cs = sound_coefficient(p);
  std::vector<double> sp(g.size()), vp(g.size());
  for (std::size_t c = 0; c < g.size(); ++c) {
    if (!(rho[c] >= 0.0)) throw PreconditionError("initial data: negative density");
    sp[c] = std::pow(rho[c], 0.5 * (p.gamma - 1.0));
    vp[c] = std::pow(rho[c], 0.5 * (p.delta - 1.0));
    out.state.sound()[c] = cs * sp[c];
    out.state.visc()[c] = vp[c];
  }
  out.norms.sound_power_h3 = sobolev_norm(sp, g, 3);
  out.norms.visc_power_h2 = sobolev_norm(vp, g, 2);
  out.norms.visc_power_d3 = std::sqrt(derivative_norm_sq(vp, g, 3));
  out.rho = std::move(rho);
  return out;
}

inline std::vector<double> sample_density(const DensityProfile& profile, const Grid& g,
                                          const ModelParameters& p) {
  std::vector<double> rho(g.size());
  for (std::size_t c = 0; c < g.size(); ++c) rho[c] = profile.density(g.position(c).norm(), p);
  return rho;
}

/// (sound0, visc0, v0 = 0) on the grid for the given profile.
inline InitialData make_initial_data(const DensityProfile& profile, const InitialVelocity& velocity,
                                     const ModelParameters& p, const Grid& g, int margin = 4) {
  profile.validate(p);
  velocity.validate();
  if (velocity.dim != g.dim) throw PreconditionError("initial data: velocity/grid dimension mismatch");
  if (g.boundary == BoundaryMode::truncated) {
    if (!profile.compact())
      throw PreconditionError("initial data: non-compact density needs a truncation radius on a truncated grid");
    const double half = -g.lo[0];
    if (profile.support_radius() > half - margin * g.h)
      throw PreconditionError("initial data: density support touches the grid boundary margin");
  }
  InitialData out = initial_data_from_density(sample_density(profile, g, p), g, p);
  out.support_radius = profile.support_radius();
  return out;
}

struct FamilyParameters {
  double p = 1.0;    // decay exponent of the added tail
  double q = 0.5;    // cutoff dilation exponent
  double eta = 0.0;  // tail amplitude
  double a = 2.0;    // tail profile f = 1 / (1 + |x|^(2a))
};

inline void validate_family(const FamilyParameters& fp, const ModelParameters& p) {
  if (!(fp.p > 0.0) || !(fp.q > 0.0)) throw PreconditionError("eps family: p and q must be positive");
  if (!(fp.eta >= 0.0)) throw PreconditionError("eps family: eta must be nonnegative");
  const double amin = std::max(1.5 / (p.gamma - 1.0), 1.5 / (p.delta - 1.0));
  if (!(fp.a > amin))
    throw PreconditionError("eps family: a=" + std::to_string(fp.a) + " must exceed " + std::to_string(amin));
  const double e = (p.delta - 1.0) / (p.gamma - 1.0);
  if (e > 2.0 && e < 3.0 && 0.5 - (3.0 - e) * (fp.p + fp.a * fp.q * (p.gamma - 1.0)) < 0.0)
    throw PreconditionError("eps family: 1/2 - (3-e)(p + a q (gamma-1)) must be nonnegative when 2 < e < 3");
}

/// Density whose (gamma-1)/2 power is base^((gamma-1)/2) chi(eps^q x) + eta eps^p f^((gamma-1)/2).
inline std::vector<double> eps_family(std::span<const double> base_rho, const Grid& g,
                                      const ModelParameters& p, double eps, const FamilyParameters& fp) {
  validate_family(fp, p);
  if (!(eps > 0.0 && eps <= 1.0)) throw PreconditionError("eps family: eps must lie in (0, 1]");
  const double k = 0.5 * (p.gamma - 1.0);
  const double dil = std::pow(eps, fp.q);
  const double tail = fp.eta * std::pow(eps, fp.p);
  std::vector<double> rho(g.size());
  for (std::size_t c = 0; c < g.size(); ++c) {
    const double r = g.position(c).norm();
    const double f = 1.0 / (1.0 + std::pow(r, 2.0 * fp.a));
    const double power = std::pow(base_rho[c], k) * cutoff(dil * r) + tail * std::pow(f, k);
    rho[c] = std::pow(power, 1.0 / k);
  }
  return rho;
}

/// Discrete L2 distance between the (gamma-1)/2 powers of two densities.
inline double power_distance(std::span<const double> a, std::span<const double> b, const Grid& g,
                             const ModelParameters& p) {
  const double k = 0.5 * (p.gamma - 1.0);
  double acc = 0.0;
  for (std::size_t c = 0; c < g.size(); ++c) {
    const double d = std::pow(a[c], k) - std::pow(b[c], k);
    acc += d * d;
  }
  return std::sqrt(acc * g.cell_volume());
}

}  // namespace vvlab
