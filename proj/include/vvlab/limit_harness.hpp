#pragma once

// Matched viscous/inviscid runs across a viscosity ladder, the difference
// norms of Wbar = (sound^eps - sound^0, u^eps - u^0), rate fits and the
// Gronwall-type envelopes bounding |Wbar|^2.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "vvlab/background_flow.hpp"
#include "vvlab/constants.hpp"
#include "vvlab/energy.hpp"
#include "vvlab/errors.hpp"
#include "vvlab/grid.hpp"
#include "vvlab/integrals.hpp"
#include "vvlab/scenarios.hpp"
#include "vvlab/solver.hpp"

namespace vvlab {

struct GridSpec {
  int dim = 1;
  int nodes = 256;
  double half_width = 8.0;
  BoundaryMode boundary = BoundaryMode::truncated;

  Grid build() const { return Grid::box(dim, nodes, half_width, boundary); }
};

struct SweepConfig {
  ModelParameters params;  // epsilon is replaced per ladder entry
  InitialVelocity velocity = InitialVelocity::identity(1);
  DensityProfile density;
  GridSpec grid;
  SolverSettings solver;
  double t_end = 1.0;
  std::vector<double> sample_fractions{0.25, 0.5, 1.0};
  std::vector<double> ladder{1e-2, 5e-3, 2.5e-3, 1.25e-3};
  double fixed_dt = 0.0;  // 0: CFL step of the initial data, shared by all runs
  bool high_regularity = false;  // also report D3
  int workers = 0;               // 0: hardware concurrency

  std::vector<double> sample_times() const {
    std::vector<double> ts;
    for (double f : sample_fractions) ts.push_back(f * t_end);
    std::sort(ts.begin(), ts.end());
    return ts;
  }

  void validate() const {
    if (ladder.size() < 3) throw ConfigError("sweep: the epsilon ladder needs at least 3 entries");
    for (double e : ladder)
      if (!(e >= 0.0 && e <= 1.0)) throw ConfigError("sweep: ladder entries must lie in [0, 1]");
    if (!(t_end > 0.0)) throw ConfigError("sweep: t_end must be positive");
    if (sample_fractions.empty()) throw ConfigError("sweep: no sample times");
    for (double f : sample_fractions)
      if (!(f > 0.0 && f <= 1.0)) throw ConfigError("sweep: sample fractions must lie in (0, 1]");
    if (velocity.dim != grid.dim) throw ConfigError("sweep: velocity and grid dimensions differ");
  }
};

/// Squared difference norms at one time.
struct DiffNorms {
  double t = 0.0;
  double l2 = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
  double d3 = 0.0;
};

inline State difference(const State& a, const State& b) {
  if (a.data.size() != b.data.size()) throw PreconditionError("difference: state layouts differ");
  State d = a;
  for (std::size_t i = 0; i < d.data.size(); ++i) d.data[i] = a.data[i] - b.data[i];
  return d;
}

inline DiffNorms diff_norms(const State& viscous, const State& euler, const Grid& g, bool with_d3) {
  const State d = difference(viscous, euler);
  DiffNorms n;
  n.t = viscous.t;
  n.l2 = w_norm_sq(d, g, 0);
  n.d1 = w_norm_sq(d, g, 1);
  n.d2 = w_norm_sq(d, g, 2);
  if (with_d3) n.d3 = w_norm_sq(d, g, 3);
  return n;
}

enum class EntryStatus { ok, blowup };

struct LadderEntry {
  double epsilon = 0.0;
  EntryStatus status = EntryStatus::ok;
  std::string message;
  std::vector<DiffNorms> norms;  // t = 0 first, then each sample time
};

enum class NormKind { l2, d1, h1, d2, d3 };

inline std::string to_string(NormKind k) {
  switch (k) {
    case NormKind::l2: return "L2";
    case NormKind::d1: return "D1";
    case NormKind::h1: return "H1";
    case NormKind::d2: return "D2";
    case NormKind::d3: return "D3";
  }
  return "L2";
}

/// Unsquared norm of the requested kind; H1 combines L2 and D1.
inline double norm_of(const DiffNorms& n, NormKind k) {
  switch (k) {
    case NormKind::l2: return std::sqrt(n.l2);
    case NormKind::d1: return std::sqrt(n.d1);
    case NormKind::h1: return std::sqrt(n.l2 + n.d1);
    case NormKind::d2: return std::sqrt(n.d2);
    case NormKind::d3: return std::sqrt(n.d3);
  }
  return 0.0;
}

/// sup over sample times of one norm.
inline double sup_norm(const LadderEntry& e, NormKind k) {
  double s = 0.0;
  for (const auto& n : e.norms) s = std::max(s, norm_of(n, k));
  return s;
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  int used = 0;
};

/// Least-squares line through (log x, log y).
inline LineFit fit_loglog(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw PreconditionError("fit: series length mismatch");
  LineFit f;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) continue;
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++f.used;
  }
  if (f.used < 3) throw FitError("fit: fewer than 3 positive points");
  const double n = f.used;
  const double den = n * sxx - sx * sx;
  if (!(den > 0.0)) throw FitError("fit: degenerate abscissae");
  f.slope = (n * sxy - sx * sy) / den;
  f.intercept = (sy - f.slope * sx) / n;
  return f;
}

struct RateFit {
  NormKind kind;
  LineFit fit;
};

struct EnvelopeParameters {
  double C04 = 0.0;
  double iota = 0.0;
  double fitted_epsilon = 0.0;
};

struct SweepResult {
  std::vector<LadderEntry> entries;  // ladder order
  std::vector<RateFit> slopes;
  std::optional<EnvelopeParameters> envelope;
  double dt = 0.0;
  std::vector<double> sample_times;

  std::optional<LineFit> slope(NormKind k) const {
    for (const auto& r : slopes)
      if (r.kind == k) return r.fit;
    return std::nullopt;
  }
};

/// Fits log sup_t |Wbar| against log eps for every norm over the surviving
/// positive-epsilon entries.
inline std::vector<RateFit> fit_rates(const std::vector<LadderEntry>& entries, bool with_d3) {
  std::vector<double> eps;
  std::vector<const LadderEntry*> ok;
  for (const auto& e : entries)
    if (e.status == EntryStatus::ok && e.epsilon > 0.0) {
      eps.push_back(e.epsilon);
      ok.push_back(&e);
    }
  if (ok.size() < 3) throw FitError("sweep: fewer than 3 surviving ladder entries");
  std::vector<NormKind> kinds{NormKind::l2, NormKind::d1, NormKind::h1, NormKind::d2};
  if (with_d3) kinds.push_back(NormKind::d3);
  std::vector<RateFit> out;
  for (NormKind k : kinds) {
    std::vector<double> y;
    for (const auto* e : ok) y.push_back(sup_norm(*e, k));
    out.push_back({k, fit_loglog(eps, y)});
  }
  return out;
}

namespace detail {

struct SweepRun {
  std::vector<State> states;  // initial, then sample times
};

inline SweepRun run_one(const SweepConfig& cfg, const Grid& g, const State& init, double eps, Mode mode,
                        double dt) {
  ModelParameters p = cfg.params;
  p.epsilon = eps;
  SolverSettings s = cfg.solver;
  s.mode = mode;
  Solver solver(g, p, BackgroundFlow(cfg.velocity), s);
  RunSettings rs;
  rs.t_end = cfg.t_end;
  rs.sample_times = cfg.sample_times();
  rs.fixed_dt = dt;
  RunResult r = solver.run(init, rs);
  SweepRun out;
  out.states.push_back(init);
  for (auto& st : r.snapshots) out.states.push_back(std::move(st));
  return out;
}

// Runs task(i) for i in [0, n) on up to `workers` threads; exceptions are
// rethrown after all threads join.
template <class Task>
void parallel_for(std::size_t n, int workers, Task task) {
  unsigned w = workers > 0 ? static_cast<unsigned>(workers) : std::max(1u, std::thread::hardware_concurrency());
  w = static_cast<unsigned>(std::min<std::size_t>(w, n));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        task(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  if (w <= 1) {
    body();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned k = 0; k < w; ++k) pool.emplace_back(body);
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace detail

/// Shared fixed step: the CFL step of the initial data, minimized over the ladder.
inline double shared_dt(const SweepConfig& cfg, const Grid& g, const State& init) {
  if (cfg.fixed_dt > 0.0) return cfg.fixed_dt;
  double dt = std::numeric_limits<double>::infinity();
  for (double eps : cfg.ladder) {
    ModelParameters p = cfg.params;
    p.epsilon = eps;
    Solver s(g, p, BackgroundFlow(cfg.velocity), cfg.solver);
    dt = std::min(dt, s.cfl_dt(init));
  }
  return dt;
}

/// Viscous runs for every ladder entry and one Euler run, all from the same
/// initial data with the same grid, scheme and fixed step. Blown-up entries
/// are flagged and left out of the fit.
inline SweepResult run_sweep(const SweepConfig& cfg, bool fit = true) {
  cfg.validate();
  const Grid g = cfg.grid.build();
  const InitialData init = make_initial_data(cfg.density, cfg.velocity, cfg.params, g, cfg.solver.margin);
  SweepResult res;
  res.sample_times = cfg.sample_times();
  res.dt = shared_dt(cfg, g, init.state);

  const std::size_t n = cfg.ladder.size();
  std::vector<std::optional<detail::SweepRun>> runs(n + 1);
  std::vector<std::string> messages(n + 1);
  detail::parallel_for(n + 1, cfg.workers, [&](std::size_t i) {
    const bool euler = i == n;
    try {
      runs[i] = detail::run_one(cfg, g, init.state, euler ? 0.0 : cfg.ladder[i],
                                euler ? Mode::euler : Mode::viscous, res.dt);
    } catch (const BlowUpError& e) {
      if (euler) throw;
      messages[i] = e.what();
    }
  });

  const auto& reference = runs[n]->states;
  for (std::size_t i = 0; i < n; ++i) {
    LadderEntry e;
    e.epsilon = cfg.ladder[i];
    if (!runs[i]) {
      e.status = EntryStatus::blowup;
      e.message = messages[i];
    } else {
      for (std::size_t k = 0; k < reference.size(); ++k)
        e.norms.push_back(diff_norms(runs[i]->states[k], reference[k], g, cfg.high_regularity));
    }
    res.entries.push_back(std::move(e));
  }
  if (fit) res.slopes = fit_rates(res.entries, cfg.high_regularity);
  return res;
}

/// Squared norms |Wbar|_2^2, |Wbar|_{D1}^2, |Wbar|_{D2}^2.
struct EnvelopeValues {
  double l2 = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

/// Upper envelopes for the squared difference norms. The branch integrals are
/// taken in the normalized form ((1+t)^p - 1)/p so that every branch joins
/// its logarithmic limit continuously.
inline EnvelopeValues gronwall_envelope(const EnvelopeValues& w0, double iota, double C, double eps, double t) {
  if (!(iota > 1.0 && iota < 2.0)) throw PreconditionError("envelope: iota must lie in (1, 2)");
  if (!(t >= 0.0)) throw PreconditionError("envelope: t must be nonnegative");
  if (!(C >= 0.0) || !(eps >= 0.0)) throw PreconditionError("envelope: C and eps must be nonnegative");
  const double growth = std::pow(1.0 + t, C);
  const double q = 1.0 - 4.0 * iota + C;
  const double p = 5.0 - 4.0 * iota;
  EnvelopeValues e;
  e.l2 = growth * (w0.l2 + C * eps * eps * power_growth(7.0 - 4.0 * iota, t));
  e.d1 = growth * (w0.d1 + C * eps * eps * power_growth(p, t));
  const double coupling = C * w0.d1 * power_integral(q, t);
  if (iota < 1.5) {
    const double pref = std::exp(C * power_growth(3.0 - 2.0 * iota, t));
    e.d2 = pref * (w0.d2 + C * eps * (1.0 + power_growth_integral(q, p, t)) + coupling);
  } else {
    e.d2 = growth * (w0.d2 + coupling + C * eps + C * eps * power_growth_integral(q, p, t));
  }
  return e;
}

inline EnvelopeValues squared_norms(const DiffNorms& n) { return {n.l2, n.d1, n.d2}; }

inline bool envelope_covers(const LadderEntry& e, double iota, double C) {
  const EnvelopeValues w0 = squared_norms(e.norms.front());
  for (const auto& n : e.norms) {
    if (n.t <= 0.0) continue;
    const EnvelopeValues env = gronwall_envelope(w0, iota, C, e.epsilon, n.t);
    if (n.l2 > env.l2 || n.d1 > env.d1 || n.d2 > env.d2) return false;
  }
  return true;
}

/// Smallest C (to 1e-9 relative) whose envelopes bound the entry's measured
/// squared norms at every positive sample time.
inline double fit_envelope_constant(const LadderEntry& e, double iota) {
  if (e.status != EntryStatus::ok || e.norms.empty()) throw FitError("envelope fit: entry has no data");
  if (envelope_covers(e, iota, 0.0)) return 0.0;
  double lo = 0.0, hi = 1.0;
  while (!envelope_covers(e, iota, hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e8) throw FitError("envelope fit: no constant bounds the measured norms");
  }
  while (hi - lo > 1e-9 * hi) {
    const double mid = 0.5 * (lo + hi);
    (envelope_covers(e, iota, mid) ? hi : lo) = mid;
  }
  return hi;
}

struct EnvelopeCheck {
  double epsilon = 0.0;
  bool covered = true;
  double worst_ratio = 0.0;  // max over times and norms of measured / envelope
};

/// Fits C04 on the smallest positive epsilon and checks every other entry.
inline std::vector<EnvelopeCheck> check_envelopes(SweepResult& res, double iota) {
  const LadderEntry* smallest = nullptr;
  for (const auto& e : res.entries)
    if (e.status == EntryStatus::ok && e.epsilon > 0.0 && (!smallest || e.epsilon < smallest->epsilon))
      smallest = &e;
  if (!smallest) throw FitError("envelope fit: no usable ladder entry");
  const double C = fit_envelope_constant(*smallest, iota);
  res.envelope = EnvelopeParameters{C, iota, smallest->epsilon};
  std::vector<EnvelopeCheck> out;
  for (const auto& e : res.entries) {
    if (&e == smallest || e.status != EntryStatus::ok) continue;
    EnvelopeCheck c;
    c.epsilon = e.epsilon;
    const EnvelopeValues w0 = squared_norms(e.norms.front());
    for (const auto& n : e.norms) {
      if (n.t <= 0.0) continue;
      const EnvelopeValues env = gronwall_envelope(w0, iota, C, e.epsilon, n.t);
      for (auto [m, b] : {std::pair{n.l2, env.l2}, std::pair{n.d1, env.d1}, std::pair{n.d2, env.d2}}) {
        if (m > b) c.covered = false;
        if (b > 0.0) c.worst_ratio = std::max(c.worst_ratio, m / b);
        else if (m > 0.0) c.worst_ratio = std::numeric_limits<double>::infinity();
      }
    }
    out.push_back(c);
  }
  return out;
}

}  // namespace vvlab
