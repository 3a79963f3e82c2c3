#pragma once

// Method-of-lines integrator for the power-of-density reformulation:
//   sound = sqrt(4 A gamma / (gamma-1)^2) rho^((gamma-1)/2)
//   visc  = rho^((delta-1)/2)
//   v     = u - u_hat
// Vacuum never requires division by the density.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "vvlab/background_flow.hpp"
#include "vvlab/constants.hpp"
#include "vvlab/errors.hpp"
#include "vvlab/grid.hpp"

namespace vvlab {

enum class StressVariant {
  full,       // alpha (grad u + grad u^T) + beta div u I
  gradient,   // 2 alpha grad u + beta div u I
  laplacian,  // viscous term alpha rho^delta Laplace u only
};

inline std::string to_string(StressVariant s) {
  switch (s) {
    case StressVariant::full: return "full";
    case StressVariant::gradient: return "gradient";
    case StressVariant::laplacian: return "laplacian";
  }
  return "full";
}

inline StressVariant stress_from_string(const std::string& s) {
  if (s == "full") return StressVariant::full;
  if (s == "gradient") return StressVariant::gradient;
  if (s == "laplacian") return StressVariant::laplacian;
  throw ConfigError("unknown stress variant '" + s + "'");
}

enum class Mode { viscous, euler };

inline double sound_coefficient(const ModelParameters& p) {
  return std::sqrt(4.0 * p.A * p.gamma / ((p.gamma - 1.0) * (p.gamma - 1.0)));
}

namespace ops {

/// Symmetric flux matrix A_j(W) for W = (sound, v), size (1 + d).
inline Eigen::MatrixXd flux_matrix(double gamma, double sound, const Vec& v, int j) {
  const int d = static_cast<int>(v.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(1 + d, 1 + d) * v[j];
  A(0, 1 + j) = 0.5 * (gamma - 1.0) * sound;
  A(1 + j, 0) = 0.5 * (gamma - 1.0) * sound;
  return A;
}

/// Second-order viscous operator L and the stress S per variant.
/// Inputs: lap[i] = Laplace u_i, graddiv[i] = d_i div u, Du(i, j) = d_j u_i.
struct Viscous {
  StressVariant variant = StressVariant::full;
  double alpha = 1.0;
  double beta = 0.0;
  double delta = 2.0;

  double L(double lap_i, double graddiv_i) const {
    switch (variant) {
      case StressVariant::full: return -alpha * lap_i - (alpha + beta) * graddiv_i;
      case StressVariant::gradient: return -2.0 * alpha * lap_i - beta * graddiv_i;
      case StressVariant::laplacian: return -alpha * lap_i;
    }
    return 0.0;
  }

  /// Q_ij = delta / (delta - 1) S_ij.
  double Q(const Mat& Du, double div, int i, int j) const {
    const double kron = i == j ? 1.0 : 0.0;
    double s = 0.0;
    switch (variant) {
      case StressVariant::full: s = alpha * (Du(i, j) + Du(j, i)) + beta * div * kron; break;
      case StressVariant::gradient: s = 2.0 * alpha * Du(i, j) + beta * div * kron; break;
      case StressVariant::laplacian: s = 0.0; break;
    }
    return delta / (delta - 1.0) * s;
  }

  /// Largest symbol coefficient of L, used by the explicit diffusion limit.
  double diffusion_coefficient() const {
    switch (variant) {
      case StressVariant::full: return 2.0 * alpha + beta;
      case StressVariant::gradient: return 2.0 * alpha + std::max(beta, 0.0);
      case StressVariant::laplacian: return alpha;
    }
    return alpha;
  }
};

}  // namespace ops

/// u_hat, grad u_hat, Laplace u_hat and grad div u_hat sampled on the grid at one time.
struct BackgroundFields {
  double t = -1.0;
  int dim = 0;
  std::vector<Vec> u;
  std::vector<Mat> grad;
  std::vector<Vec> lap;
  std::vector<Vec> graddiv;

  static BackgroundFields sample(const BackgroundFlow& flow, const Grid& g, double t) {
    BackgroundFields b;
    b.t = t;
    b.dim = g.dim;
    const std::size_t n = g.size();
    b.u.resize(n);
    b.grad.resize(n);
    b.lap.assign(n, Vec::Zero(g.dim));
    b.graddiv.assign(n, Vec::Zero(g.dim));
    const int d = g.dim;
    if (flow.initial().is_affine()) {
      // grad is uniform: (I + tA)^{-1} A, and u = grad (x - t b) + b.
      const Mat I = Mat::Identity(d, d);
      const Mat& A = flow.initial().matrix;
      Eigen::FullPivLU<Mat> lu(I + t * A);
      if (!lu.isInvertible()) throw NewtonError("background flow: I + t A is singular");
      const Mat G = lu.solve(A);
      const Vec& s = flow.initial().shift;
      for (std::size_t c = 0; c < n; ++c) {
        const Vec x = g.position(c);
        b.grad[c] = G;
        b.u[c] = G * (x - t * s) + s;
      }
      return b;
    }
    for (std::size_t c = 0; c < n; ++c) {
      const Vec x = g.position(c);
      b.u[c] = flow.eval(t, x);
      b.grad[c] = flow.grad(t, x);
      const Hessian H = flow.hessian(t, x);
      for (int i = 0; i < d; ++i) {
        double lap = 0.0, gd = 0.0;
        for (int k = 0; k < d; ++k) lap += H[i](k, k);
        for (int j = 0; j < d; ++j) gd += H[j](j, i);
        b.lap[c][i] = lap;
        b.graddiv[c][i] = gd;
      }
    }
    return b;
  }
};

struct SolverSettings {
  Mode mode = Mode::viscous;
  StressVariant stress = StressVariant::full;
  double cfl = 0.4;
  double hyperdiffusion = 0.0;  // coefficient (velocity units) of the -sum delta^4 / h term on W
  int collar = 2;               // exterior nodes with pinned density powers
  int margin = 4;               // minimum node distance of the support from the boundary
  double support_threshold = 1e-10;  // relative to the initial max of sound / visc
};

struct StepStats {
  long clip_events = 0;
};

struct RunSettings {
  double t_end = 1.0;
  std::vector<double> sample_times;  // snapshots are recorded exactly at these times
  double fixed_dt = 0.0;             // > 0 disables the adaptive CFL step
  int observe_every = 1;             // observer cadence in steps
};

struct RunResult {
  State final_state;
  std::vector<State> snapshots;  // one per sample time, in order
  std::vector<double> dt_history;
  long clip_events = 0;
  long steps = 0;
};

/// Physical fields recovered from the power variables.
struct PhysicalFields {
  std::vector<double> rho;
  std::vector<std::vector<double>> u;
  std::vector<double> pressure;
};

inline PhysicalFields reconstruct_physical(const State& s, const Grid& g, const ModelParameters& p,
                                    const BackgroundFields& bg);

/// Not safe for concurrent use of one instance (the background cache is
/// mutable); independent runs use independent solvers.
class Solver {
 public:
  Solver(Grid grid, ModelParameters params, BackgroundFlow flow, SolverSettings settings = {})
      : grid_(grid), params_(params), flow_(std::move(flow)), settings_(settings) {
    params_.validate(/*allow_inviscid=*/true);
    if (flow_.dim() != grid_.dim)
      throw PreconditionError("solver: background flow dimension does not match the grid");
    viscous_ = {settings_.stress, params_.alpha, params_.beta, params_.delta};
  }

  const Grid& grid() const { return grid_; }
  const ModelParameters& params() const { return params_; }
  const BackgroundFlow& flow() const { return flow_; }
  const SolverSettings& settings() const { return settings_; }

  /// Viscosity scale that actually enters the equations.
  double effective_epsilon() const {
    return settings_.mode == Mode::euler ? 0.0 : params_.epsilon;
  }

  State rhs(const State& s) const {
    State out(grid_, s.t);
    rhs_into(s, background(s.t), out);
    return out;
  }

  double cfl_dt(const State& s) const {
    const BackgroundFields& bg = background(s.t);
    const int d = grid_.dim;
    const double half_gm1 = 0.5 * (params_.gamma - 1.0);
    double speed = 0.0, visc2 = 0.0;
    for (std::size_t c = 0; c < grid_.size(); ++c) {
      double u2 = 0.0;
      for (int a = 0; a < d; ++a) {
        const double ua = s.vel(a)[c] + bg.u[c][a];
        u2 += ua * ua;
      }
      speed = std::max(speed, std::sqrt(u2) + half_gm1 * s.sound()[c] * std::sqrt(double(d)));
      visc2 = std::max(visc2, s.visc()[c] * s.visc()[c]);
    }
    const double h = grid_.h;
    double dt = std::numeric_limits<double>::infinity();
    if (speed > 0.0) dt = h / speed;
    const double eps = effective_epsilon();
    const double diff = eps * visc2 * viscous_.diffusion_coefficient() * 2.0 * d;
    if (diff > 0.0) dt = std::min(dt, h * h / diff);
    if (!std::isfinite(dt)) dt = h;
    dt *= settings_.cfl;
    // RK4 real-axis stability for the fourth-difference damping
    if (settings_.hyperdiffusion > 0.0)
      dt = std::min(dt, 2.5 * h / (settings_.hyperdiffusion * 16.0 * d));
    return dt;
  }

  /// Pins the collar, extrapolates v into it and clips negative density powers.
  long apply_constraints(State& s) const {
    long clips = 0;
    for (int comp : {State::kSound, State::kVisc}) {
      auto f = s.comp(comp);
      for (double& x : f)
        if (x < 0.0) {
          x = 0.0;
          ++clips;
        }
    }
    if (grid_.boundary == BoundaryMode::truncated) {
      const int w = settings_.collar;
      for (std::size_t c = 0; c < grid_.size(); ++c) {
        if (grid_.boundary_distance(c) >= w) continue;
        s.sound()[c] = 0.0;
        s.visc()[c] = 0.0;
        auto ijk = grid_.coords(c);
        for (int a = 0; a < grid_.dim; ++a) ijk[a] = std::clamp(ijk[a], w, grid_.n[a] - 1 - w);
        const std::size_t src = grid_.index(ijk[0], ijk[1], ijk[2]);
        for (int a = 0; a < grid_.dim; ++a) s.vel(a)[c] = s.vel(a)[src];
      }
    }
    return clips;
  }

  /// One classical RK4 step. Constraints are applied after every stage.
  StepStats step(State& s, double dt) const {
    if (!(dt > 0.0)) throw PreconditionError("step: dt must be positive");
    StepStats stats;
    const std::size_t N = s.data.size();
    const double t0 = s.t;
    State k1(grid_, t0), k2(grid_, t0), k3(grid_, t0), k4(grid_, t0), tmp(grid_, t0);

    rhs_into(s, background(t0), k1);
    stage(s, k1, 0.5 * dt, tmp, t0 + 0.5 * dt, stats);
    rhs_into(tmp, background(t0 + 0.5 * dt), k2);
    stage(s, k2, 0.5 * dt, tmp, t0 + 0.5 * dt, stats);
    rhs_into(tmp, background(t0 + 0.5 * dt), k3);
    stage(s, k3, dt, tmp, t0 + dt, stats);
    rhs_into(tmp, background(t0 + dt), k4);
    for (std::size_t i = 0; i < N; ++i)
      s.data[i] += dt / 6.0 * (k1.data[i] + 2.0 * k2.data[i] + 2.0 * k3.data[i] + k4.data[i]);
    s.t = t0 + dt;
    stats.clip_events += apply_constraints(s);
    check_finite(s);
    return stats;
  }

  /// Integrates to settings.t_end, landing exactly on every sample time.
  /// `observer` is called on the initial state and every `observe_every` steps,
  /// and always on sample times and the final state.
  RunResult run(State s, const RunSettings& rs,
                const std::function<void(const State&)>& observer = {}) const {
    if (!(rs.t_end >= s.t)) throw PreconditionError("run: t_end precedes the initial time");
    RunResult out;
    std::vector<double> targets = rs.sample_times;
    std::sort(targets.begin(), targets.end());
    for (double ts : targets)
      if (ts < s.t || ts > rs.t_end) throw PreconditionError("run: sample time outside [t0, t_end]");
    if (targets.empty() || targets.back() != rs.t_end) targets.push_back(rs.t_end);

    out.clip_events += apply_constraints(s);
    const double ref = std::max(max_abs(s.sound()), max_abs(s.visc()));
    if (observer) observer(s);
    std::size_t next = 0;
    while (next < targets.size() && targets[next] <= s.t) {
      if (next < rs.sample_times.size()) out.snapshots.push_back(s);
      ++next;
    }
    long since_obs = 0;
    while (next < targets.size()) {
      double dt = rs.fixed_dt > 0.0 ? rs.fixed_dt : cfl_dt(s);
      bool lands = false;
      if (s.t + dt >= targets[next] - 1e-12 * std::max(1.0, targets[next])) {
        dt = targets[next] - s.t;
        lands = true;
      }
      if (dt > 0.0) {
        out.clip_events += step(s, dt).clip_events;
        out.dt_history.push_back(dt);
        ++out.steps;
        ++since_obs;
      }
      if (lands) s.t = targets[next];
      check_margin(s, ref);
      const bool is_sample = lands && next < rs.sample_times.size();
      if (observer && (lands || since_obs >= rs.observe_every)) {
        observer(s);
        since_obs = 0;
      }
      if (lands) {
        if (is_sample) out.snapshots.push_back(s);
        ++next;
        while (next < targets.size() && targets[next] <= s.t) {
          if (next < rs.sample_times.size()) out.snapshots.push_back(s);
          ++next;
        }
      }
    }
    out.final_state = std::move(s);
    return out;
  }

  PhysicalFields reconstruct_physical(const State& s) const {
    return vvlab::reconstruct_physical(s, grid_, params_, background(s.t));
  }

  /// Total mass h^d sum rho.
  double mass(const State& s) const {
    const PhysicalFields p = reconstruct_physical(s);
    double m = 0.0;
    for (double r : p.rho) m += r;
    return m * grid_.cell_volume();
  }

  const BackgroundFields& background(double t) const {
    for (auto& slot : cache_)
      if (slot.t == t && slot.dim == grid_.dim) return slot;
    auto& slot = cache_[cache_next_];
    cache_next_ = (cache_next_ + 1) % cache_.size();
    if (flow_.is_zero()) {
      slot = BackgroundFields{};
      slot.t = t;
      slot.dim = grid_.dim;
      slot.u.assign(grid_.size(), Vec::Zero(grid_.dim));
      slot.grad.assign(grid_.size(), Mat::Zero(grid_.dim, grid_.dim));
      slot.lap.assign(grid_.size(), Vec::Zero(grid_.dim));
      slot.graddiv.assign(grid_.size(), Vec::Zero(grid_.dim));
    } else {
      slot = BackgroundFields::sample(flow_, grid_, t);
    }
    return slot;
  }

 private:
  static double max_abs(std::span<const double> f) {
    double m = 0.0;
    for (double x : f) m = std::max(m, std::abs(x));
    return m;
  }

  void stage(const State& base, const State& k, double h, State& out, double t,
             StepStats& stats) const {
    for (std::size_t i = 0; i < base.data.size(); ++i) out.data[i] = base.data[i] + h * k.data[i];
    out.t = t;
    stats.clip_events += apply_constraints(out);
  }

  void check_finite(const State& s) const {
    for (double x : s.data)
      if (!std::isfinite(x) || std::abs(x) > 1e150)
        throw BlowUpError("solver: non-finite or overflowing field", s.t);
  }

  void check_margin(const State& s, double ref) const {
    if (grid_.boundary != BoundaryMode::truncated || ref <= 0.0) return;
    const double thr = settings_.support_threshold * ref;
    for (std::size_t c = 0; c < grid_.size(); ++c) {
      if (s.sound()[c] > thr || s.visc()[c] > thr) {
        if (grid_.boundary_distance(c) < settings_.margin)
          throw PreconditionError("solver: density support reached the boundary margin at t=" +
                                  std::to_string(s.t));
      }
    }
  }

  void rhs_into(const State& s, const BackgroundFields& bg, State& out) const {
    const Grid& g = grid_;
    const int d = g.dim;
    const double gm = 0.5 * (params_.gamma - 1.0);
    const double dm = 0.5 * (params_.delta - 1.0);
    const double eps = effective_epsilon();
    const double hyper = settings_.hyperdiffusion;
    const auto sound = s.sound();
    const auto visc = s.visc();
    std::fill(out.data.begin(), out.data.end(), 0.0);
    auto dsound = out.sound();
    auto dvisc = out.visc();

    for (std::size_t c = 0; c < g.size(); ++c) {
      if (g.boundary == BoundaryMode::truncated && g.boundary_distance(c) < settings_.collar)
        continue;
      const Vec& uh = bg.u[c];
      const Mat& G = bg.grad[c];

      Mat Dv(d, d);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) Dv(i, j) = stencil::d1(s.vel(i), g, c, j);
      double div_v = 0.0, div_uh = 0.0;
      for (int i = 0; i < d; ++i) {
        div_v += Dv(i, i);
        div_uh += G(i, i);
      }
      Vec u(d);
      for (int j = 0; j < d; ++j) u[j] = s.vel(j)[c] + uh[j];

      Vec grad_sound(d), grad_visc(d);
      for (int j = 0; j < d; ++j) {
        grad_sound[j] = stencil::d1(sound, g, c, j);
        grad_visc[j] = stencil::d1(visc, g, c, j);
      }

      // Transport in skew-symmetric form, u.grad f = (div(u f) + u.grad f - f div u) / 2, so
      // that sum f * transport telescopes and mass is conserved exactly when gamma = 2.
      double flux_sound = 0.0, flux_visc = 0.0;
      for (int j = 0; j < d; ++j) {
        const std::size_t cp = g.shift(c, j, 1), cm = g.shift(c, j, -1);
        const double up = s.vel(j)[cp] + bg.u[cp][j], um = s.vel(j)[cm] + bg.u[cm][j];
        flux_sound += (up * sound[cp] - um * sound[cm]) / (2.0 * g.h);
        flux_visc += (up * visc[cp] - um * visc[cm]) / (2.0 * g.h);
      }
      const double div_u = div_v + div_uh;
      dsound[c] = -0.5 * (flux_sound + u.dot(grad_sound)) - (gm - 0.5) * sound[c] * div_u;
      dvisc[c] = -0.5 * (flux_visc + u.dot(grad_visc)) - (dm - 0.5) * visc[c] * div_u;

      for (int i = 0; i < d; ++i) {
        double r = 0.0;
        for (int j = 0; j < d; ++j) r -= u[j] * Dv(i, j);  // (v + u_hat) . grad v_i
        for (int j = 0; j < d; ++j) r -= s.vel(j)[c] * G(i, j);  // (v . grad) u_hat
        r -= gm * sound[c] * grad_sound[i];
        out.vel(i)[c] = r;
      }

      if (eps != 0.0) {
        const double visc2 = visc[c] * visc[c];
        const Mat Du = Dv + G;
        for (int i = 0; i < d; ++i) {
          double lap_v = 0.0, graddiv_v = 0.0;
          for (int k = 0; k < d; ++k) lap_v += stencil::d2(s.vel(i), g, c, k);
          for (int j = 0; j < d; ++j)
            graddiv_v += j == i ? stencil::d2(s.vel(j), g, c, i) : stencil::d11(s.vel(j), g, c, i, j);
          const double Lv = viscous_.L(lap_v, graddiv_v);
          const double Luh = viscous_.L(bg.lap[c][i], bg.graddiv[c][i]);
          double hq = 0.0;
          for (int j = 0; j < d; ++j) hq += viscous_.Q(Du, div_u, i, j) * 2.0 * visc[c] * grad_visc[j];
          out.vel(i)[c] += -eps * visc2 * Lv - eps * visc2 * Luh + eps * hq;
        }
      }

      if (hyper != 0.0) {
        double h4 = 0.0;
        for (int k = 0; k < d; ++k) h4 += stencil::delta4(sound, g, c, k);
        dsound[c] -= hyper * h4 / g.h;
        for (int i = 0; i < d; ++i) {
          double v4 = 0.0;
          for (int k = 0; k < d; ++k) v4 += stencil::delta4(s.vel(i), g, c, k);
          out.vel(i)[c] -= hyper * v4 / g.h;
        }
      }
    }
  }

  Grid grid_;
  ModelParameters params_;
  BackgroundFlow flow_;
  SolverSettings settings_;
  ops::Viscous viscous_;
  mutable std::array<BackgroundFields, 3> cache_{};
  mutable std::size_t cache_next_ = 0;
};

inline PhysicalFields reconstruct_physical(const State& s, const Grid& g, const ModelParameters& p,
                                           const BackgroundFields& bg) {
  PhysicalFields out;
  const std::size_t n = g.size();
  out.rho.resize(n);
  out.pressure.resize(n);
  out.u.assign(g.dim, std::vector<double>(n));
  const double k = (p.gamma - 1.0) * (p.gamma - 1.0) / (4.0 * p.A * p.gamma);
  for (std::size_t c = 0; c < n; ++c) {
    const double phi = s.sound()[c];
    const double rho = phi > 0.0 ? std::pow(k * phi * phi, 1.0 / (p.gamma - 1.0)) : 0.0;
    out.rho[c] = rho;
    out.pressure[c] = p.A * std::pow(rho, p.gamma);
    for (int a = 0; a < g.dim; ++a) out.u[a][c] = s.vel(a)[c] + bg.u[c][a];
  }
  return out;
}

}  // namespace vvlab
