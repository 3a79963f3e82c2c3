// Command-line front end: constants, background, simulate, euler, sweep, ode, report.

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "vvlab/config.hpp"
#include "vvlab/energy.hpp"
#include "vvlab/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace vvlab;

namespace {

enum Exit : int { kOk = 0, kRuntime = 1, kConfig = 2, kPrecondition = 3, kBlowUp = 4, kFit = 5 };

struct Context {
  RunConfig cfg;
  std::string hash;
  fs::path out;

  // Created on first write so failed validation leaves nothing behind.
  fs::path file(const std::string& name) const {
    fs::create_directories(out);
    return out / name;
  }
  void say(const std::string& s) const {
    if (cfg.verbosity > 0) std::cout << s << '\n';
  }
};

json header(const Context& ctx, const std::string& kind) {
  return {{"kind", kind}, {"config_hash", ctx.hash}, {"seed", ctx.cfg.seed}};
}

json params_json(const ModelParameters& p) {
  return {{"gamma", p.gamma}, {"delta", p.delta}, {"alpha", p.alpha}, {"beta", p.beta},
          {"A", p.A},         {"epsilon", p.epsilon}, {"kappa", p.kappa}};
}

json constants_json(const DerivedConstants& c) {
  return {{"M1", c.M1},     {"M2", c.M2},           {"M3", c.M3},         {"M4", c.M4},
          {"eps_star", c.eps_star}, {"eta_star", c.eta_star}, {"b_star", c.b_star}, {"iota", c.iota},
          {"r", c.r},       {"d_star", c.d_star},   {"n", c.n},           {"m", c.m}};
}

json grid_json(const Grid& g) {
  return {{"dim", g.dim}, {"nodes", g.n[0]}, {"h", g.h}, {"lo", g.lo[0]}, {"boundary", to_string(g.boundary)}};
}

std::string join(const std::vector<std::string>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + xs[i];
  return s;
}

int cmd_constants(const Context& ctx) {
  const auto& p = ctx.cfg.model;
  p.validate();
  const DerivedConstants c = derive_constants(p, ctx.cfg.variant);
  const ConditionSet s = check_conditions(p);

  std::vector<std::pair<std::string, std::string>> rec{
      {"gamma", io::format_double(p.gamma)}, {"delta", io::format_double(p.delta)},
      {"alpha", io::format_double(p.alpha)}, {"beta", io::format_double(p.beta)},
      {"variant", ctx.cfg.variant == ConstantsVariant::proof ? "proof" : "theorem"},
      {"M1", io::format_double(c.M1)},       {"M2", io::format_double(c.M2)},
      {"M3", io::format_double(c.M3)},       {"M4", io::format_double(c.M4)},
      {"eps_star", io::format_double(c.eps_star)}, {"eta_star", io::format_double(c.eta_star)},
      {"b_star", io::format_double(c.b_star)}, {"iota", io::format_double(c.iota)},
      {"r", io::format_double(c.r)},         {"d_star", io::format_double(c.d_star)},
      {"n", io::format_double(c.n)},         {"m", io::format_double(c.m)},
      {"conditions", join(s.names())},       {"admissible", s.admissible() ? "true" : "false"},
      {"p1_feasible", s.p1_feasible ? "true" : "false"}};
  std::ofstream txt(ctx.file("constants.txt"), std::ios::binary);
  for (const auto& [k, v] : rec) {
    txt << k << '=' << v << '\n';
    if (ctx.cfg.verbosity > 0) std::cout << k << '=' << v << '\n';
  }
  json j = header(ctx, "constants");
  j["params"] = params_json(p);
  j["constants"] = constants_json(c);
  j["conditions"] = s.names();
  j["admissible"] = s.admissible();
  j["p1_feasible"] = s.p1_feasible;
  io::write_json(ctx.file("constants.json"), j);
  return kOk;
}

int cmd_background(const Context& ctx) {
  const auto& b = ctx.cfg.background;
  const BackgroundFlow flow(ctx.cfg.velocity);
  const int d = flow.dim();
  const auto points = sample_box(d, b.points_per_axis, b.half_width);
  const auto times = sample_times(b.t_max, b.time_count);
  const double gap = spectral_gap(ctx.cfg.velocity, points);

  // transport residual u_t + u . grad u at seeded random (t, x)
  std::mt19937_64 rng(ctx.cfg.seed);
  std::uniform_real_distribution<double> T(0.0, b.t_max), X(-b.half_width, b.half_width);
  const double h = 1e-4;
  double residual = 0.0;
  for (int k = 0; k < b.random_points; ++k) {
    const double t = T(rng) + h;
    Vec x(d);
    for (int a = 0; a < d; ++a) x[a] = X(rng);
    const Vec u = flow.eval(t, x);
    Vec r = (flow.eval(t + h, x) - flow.eval(t - h, x)) / (2 * h);
    for (int j = 0; j < d; ++j) {
      Vec e = Vec::Zero(d);
      e[j] = h;
      r += u[j] * (flow.eval(t, x + e) - flow.eval(t, x - e)) / (2 * h);
    }
    residual = std::max(residual, r.norm());
  }

  io::CsvWriter csv(ctx.file("background.csv"), {"t", "x0", "x1", "x2", "u0", "u1", "u2", "K_norm"});
  std::vector<double> kbounds;
  for (double t : times) {
    const std::vector<double> one{t};
    const double kb = k_matrix_bound(flow, one, points);
    kbounds.push_back(kb);
    for (const Vec& x : points) {
      const Vec u = flow.eval(t, x);
      Eigen::JacobiSVD<Mat> svd(flow.k_matrix(t, x));
      std::vector<double> row{t};
      for (int a = 0; a < 3; ++a) row.push_back(a < d ? x[a] : 0.0);
      for (int a = 0; a < 3; ++a) row.push_back(a < d ? u[a] : 0.0);
      row.push_back(svd.singularValues()[0]);
      csv.row(row);
    }
  }
  double kmax = 0.0;
  for (double k : kbounds) kmax = std::max(kmax, k);
  json j = header(ctx, "background");
  j["dim"] = d;
  j["t_max"] = b.t_max;
  j["k_bound"] = kmax;
  j["k_bound_by_time"] = kbounds;
  j["times"] = times;
  j["spectral_gap"] = gap;
  j["spectral_condition"] = gap >= ctx.cfg.model.kappa;
  j["max_transport_residual"] = residual;
  io::write_json(ctx.file("background.json"), j);
  ctx.say("k_bound=" + io::format_double(kmax) + " spectral_gap=" + io::format_double(gap) +
          " max_transport_residual=" + io::format_double(residual));
  return kOk;
}

int cmd_simulate(const Context& ctx, Mode mode) {
  const RunConfig& cfg = ctx.cfg;
  ModelParameters p = cfg.model;
  p.validate();
  if (mode == Mode::euler) p.epsilon = 0.0;
  const Grid g = cfg.grid.build();
  const InitialData init = make_initial_data(cfg.density, cfg.velocity, cfg.model, g, cfg.solver.margin);
  SolverSettings ss = cfg.solver;
  ss.mode = mode;
  const Solver solver(g, p, BackgroundFlow(cfg.velocity), ss);

  double iota = 0.0;
  try {
    iota = derive_constants(cfg.model, cfg.variant).iota;
  } catch (const std::domain_error&) {
  }
  EnergyMonitor monitor(g, solver.effective_epsilon(), iota);
  RunSettings rs = cfg.run;
  std::vector<double> samples;
  for (double t : rs.sample_times)
    if (t <= rs.t_end) samples.push_back(t);
  rs.sample_times = samples;
  const RunResult result = solver.run(init.state, rs, std::ref(monitor));

  {
    io::CsvWriter csv(ctx.file("energy.csv"),
                      {"t", "Y0", "Y1", "Y2", "Y3", "U0", "U1", "U2", "U3", "Z", "dissipation", "envelope"});
    for (const auto& r : monitor.records()) {
      const auto& s = r.snap;
      csv.row({s.t, s.Y[0], s.Y[1], s.Y[2], s.Y[3], s.U[0], s.U[1], s.U[2], s.U[3], s.Z, r.dissipation, r.envelope});
    }
  }
  {
    io::CsvWriter csv(ctx.file("dt_history.csv"), {"step", "dt"});
    for (std::size_t i = 0; i < result.dt_history.size(); ++i) csv.row({double(i), result.dt_history[i]});
  }
  json snaps = json::array();
  for (std::size_t k = 0; k < result.snapshots.size(); ++k) {
    const State& s = result.snapshots[k];
    const auto phys = solver.reconstruct_physical(s);
    const std::string name = "snapshot_" + std::to_string(k) + ".csv";
    io::CsvWriter csv(ctx.file(name), {"x0", "x1", "x2", "sound", "visc", "v0", "v1", "v2", "rho", "u0", "u1", "u2"});
    for (std::size_t c = 0; c < g.size(); ++c) {
      const Vec x = g.position(c);
      std::vector<double> row;
      for (int a = 0; a < 3; ++a) row.push_back(a < g.dim ? x[a] : 0.0);
      row.push_back(s.sound()[c]);
      row.push_back(s.visc()[c]);
      for (int a = 0; a < 3; ++a) row.push_back(a < g.dim ? s.vel(a)[c] : 0.0);
      row.push_back(phys.rho[c]);
      for (int a = 0; a < 3; ++a) row.push_back(a < g.dim ? phys.u[a][c] : 0.0);
      csv.row(row);
    }
    snaps.push_back({{"t", s.t}, {"file", name}});
  }

  json init_j = header(ctx, "initial_data");
  init_j["density"] = {{"kind", to_string(cfg.density.kind)}, {"amplitude", cfg.density.amplitude},
                       {"sigma", cfg.density.sigma},         {"radius", cfg.density.radius},
                       {"truncation", cfg.density.truncation}};
  init_j["norms"] = {{"sound_power_h3", init.norms.sound_power_h3},
                     {"visc_power_h2", init.norms.visc_power_h2},
                     {"visc_power_d3", init.norms.visc_power_d3},
                     {"total", init.norms.total(cfg.model.epsilon)}};
  init_j["support_radius"] = init.support_radius;
  init_j["params"] = params_json(cfg.model);
  io::write_json(ctx.file("initial_data.json"), init_j);

  double dt_min = result.dt_history.empty() ? 0.0 : result.dt_history.front(), dt_max = dt_min;
  for (double dt : result.dt_history) {
    dt_min = std::min(dt_min, dt);
    dt_max = std::max(dt_max, dt);
  }
  json j = header(ctx, mode == Mode::euler ? "euler" : "simulate");
  j["mode"] = mode == Mode::euler ? "euler" : "viscous";
  j["qualitative_mode"] = g.dim < 3;
  j["grid"] = grid_json(g);
  j["params"] = params_json(p);
  j["stress"] = to_string(ss.stress);
  j["hyperdiffusion"] = ss.hyperdiffusion;
  j["t_end"] = rs.t_end;
  j["sample_times"] = rs.sample_times;
  j["snapshots"] = snaps;
  j["steps"] = result.steps;
  j["clip_events"] = result.clip_events;
  j["cfl"] = {{"safety", ss.cfl}, {"dt_min", dt_min}, {"dt_max", dt_max}, {"history", "dt_history.csv"}};
  j["energy"] = {{"file", "energy.csv"}, {"iota", iota}, {"C0", monitor.envelope_constant()}};
  j["mass"] = {{"initial", solver.mass(init.state)}, {"final", solver.mass(result.final_state)}};

  std::vector<double> ts, zs;
  for (const auto& r : monitor.records()) {
    ts.push_back(r.snap.t);
    zs.push_back(r.snap.Z);
  }
  try {
    const DecayFit fit = fit_decay(ts, zs);
    j["decay_fit"] = {{"slope", fit.slope}, {"constant", fit.constant}, {"sup_weighted", fit.sup_weighted},
                      {"used", fit.used},   {"excluded", fit.excluded}};
    if (fit.excluded > 0) std::cerr << "warning: " << fit.excluded << " nonpositive Z samples excluded from the fit\n";
  } catch (const FitError& e) {
    j["decay_fit"] = {{"error", e.what()}};
  }
  io::write_json(ctx.file("manifest.json"), j);
  ctx.say("steps=" + std::to_string(result.steps) + " clip_events=" + std::to_string(result.clip_events) +
          " Z_final=" + io::format_double(monitor.records().back().snap.Z));
  return kOk;
}

int cmd_sweep(const Context& ctx) {
  const SweepConfig sc = ctx.cfg.sweep_config();
  sc.validate();
  sc.params.validate(true);
  SweepResult res = run_sweep(sc, /*fit=*/false);

  json j = header(ctx, "sweep");
  j["qualitative_mode"] = sc.grid.dim < 3;
  j["ladder"] = sc.ladder;
  j["dt"] = res.dt;
  j["sample_times"] = res.sample_times;
  j["grid"] = grid_json(sc.grid.build());
  j["params"] = params_json(sc.params);
  json entries = json::array();
  {
    io::CsvWriter csv(ctx.file("sweep.csv"), {"norm", "epsilon", "t", "value"});
    for (const auto& e : res.entries) {
      json rows = json::array();
      for (const auto& n : e.norms) {
        for (NormKind k : {NormKind::l2, NormKind::d1, NormKind::h1, NormKind::d2, NormKind::d3}) {
          if (k == NormKind::d3 && !sc.high_regularity) continue;
          const std::vector<double> v{e.epsilon, n.t, norm_of(n, k)};
          csv.row(to_string(k), v);
        }
        rows.push_back({{"t", n.t}, {"L2", norm_of(n, NormKind::l2)}, {"D1", norm_of(n, NormKind::d1)},
                        {"H1", norm_of(n, NormKind::h1)}, {"D2", norm_of(n, NormKind::d2)},
                        {"D3", norm_of(n, NormKind::d3)}});
      }
      entries.push_back({{"epsilon", e.epsilon},
                         {"status", e.status == EntryStatus::ok ? "ok" : "blowup"},
                         {"message", e.message},
                         {"norms", rows}});
    }
  }
  j["entries"] = entries;

  int status = kOk;
  try {
    res.slopes = fit_rates(res.entries, sc.high_regularity);
    json slopes = json::object();
    for (const auto& r : res.slopes) slopes[to_string(r.kind)] = {{"slope", r.fit.slope}, {"intercept", r.fit.intercept}};
    j["slopes"] = slopes;
  } catch (const FitError& e) {
    j["slopes"] = {{"error", e.what()}};
    status = kFit;
  }
  if (status == kOk && ctx.cfg.envelope_check) {
    double iota = 0.0;
    try {
      iota = derive_constants(sc.params, ctx.cfg.variant).iota;
    } catch (const std::domain_error&) {
    }
    if (iota > 1.0 && iota < 2.0) {
      try {
        const auto checks = check_envelopes(res, iota);
        json cj = json::array();
        for (const auto& c : checks)
          cj.push_back({{"epsilon", c.epsilon}, {"covered", c.covered}, {"worst_ratio", c.worst_ratio}});
        j["envelope"] = {{"C04", res.envelope->C04}, {"iota", iota}, {"fitted_epsilon", res.envelope->fitted_epsilon},
                         {"checks", cj}};
      } catch (const FitError& e) {
        j["envelope"] = {{"error", e.what()}};
      }
    } else {
      j["envelope"] = {{"error", "iota outside (1, 2) for these parameters"}};
    }
  }
  io::write_json(ctx.file("sweep.json"), j);
  for (const auto& r : res.slopes) ctx.say(to_string(r.kind) + "_slope=" + io::format_double(r.fit.slope));
  return status;
}

int cmd_ode(const Context& ctx) {
  const OdeRun& o = ctx.cfg.ode;
  const OdeSolution sol = solve_closed_form(o.params);
  const OdeTrajectory tr = solve_numeric(o.params, o.t_end, o.dt);
  {
    io::CsvWriter csv(ctx.file("ode.csv"), {"t", "Z_closed", "Z_numeric"});
    const std::size_t every = static_cast<std::size_t>(std::max(1, o.output_every));
    for (std::size_t i = 0; i < tr.t.size(); ++i)
      if (i % every == 0 || i + 1 == tr.t.size()) csv.row({tr.t[i], sol(tr.t[i]), tr.z[i]});
  }
  json j = header(ctx, "ode");
  const auto& p = o.params;
  j["params"] = {{"a", p.a}, {"b", p.b}, {"C1", p.C1}, {"C2", p.C2}, {"D1", p.D1}, {"D2", p.D2}, {"Z0", p.Z0}};
  j["lambda"] = std::isfinite(sol.lambda()) ? json(sol.lambda()) : json("inf");
  j["tail_integrable"] = sol.tail_integrable();
  j["global"] = sol.global();
  j["t_star"] = sol.blowup_time() ? json(*sol.blowup_time()) : json(nullptr);
  j["numeric"] = {{"dt", o.dt},
                  {"t_end", o.t_end},
                  {"blew_up", tr.blew_up},
                  {"blowup_time", tr.blowup_time ? json(*tr.blowup_time) : json(nullptr)}};
  io::write_json(ctx.file("ode.json"), j);
  ctx.say("lambda=" + (std::isfinite(sol.lambda()) ? io::format_double(sol.lambda()) : std::string("inf")) +
          " global=" + (sol.global() ? "true" : "false") +
          (sol.blowup_time() ? " t_star=" + io::format_double(*sol.blowup_time()) : std::string()));
  return kOk;
}

int cmd_report(const Context& ctx, const std::vector<std::string>& extra) {
  std::vector<std::string> inputs = ctx.cfg.report_inputs;
  inputs.insert(inputs.end(), extra.begin(), extra.end());
  if (inputs.empty()) throw ConfigError("report: no input manifests");
  json merged = header(ctx, "report");
  json items = json::array();
  for (const auto& in : inputs) {
    json m = io::read_json(in);
    items.push_back({{"source", in}, {"kind", m.value("kind", "unknown")}, {"config_hash", m.value("config_hash", "")},
                     {"manifest", m}});
    ctx.say(in + ": " + m.value("kind", "unknown"));
  }
  merged["manifests"] = items;
  io::write_json(ctx.file("report.json"), merged);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vvlab: degenerate-viscosity compressible flow laboratory"};
  app.require_subcommand(1);
  std::string config_path, output;
  std::optional<std::uint64_t> seed;
  int verbosity = -1;
  std::vector<std::string> report_inputs;

  auto common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "run configuration (INI)")->check(CLI::ExistingFile);
    sub->add_option("-o,--output", output, "output directory (overrides VVLAB_OUTPUT_DIR and output.dir)");
    sub->add_option("--seed", seed, "seed for randomized sampling");
    sub->add_option("-v,--verbosity", verbosity, "0 silences stdout");
  };
  std::vector<CLI::App*> subs;
  for (const char* name : {"constants", "background", "simulate", "euler", "sweep", "ode", "report"}) {
    auto* s = app.add_subcommand(name);
    common(s);
    subs.push_back(s);
  }
  subs.back()->add_option("manifests", report_inputs, "manifests to merge");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfig;
  }

  try {
    Context ctx;
    if (!config_path.empty()) ctx.cfg = load_config(config_path);
    if (seed) ctx.cfg.seed = *seed;
    if (verbosity >= 0) ctx.cfg.verbosity = verbosity;
    if (const char* env = std::getenv("VVLAB_OUTPUT_DIR"); env && *env) ctx.cfg.output_dir = env;
    if (!output.empty()) ctx.cfg.output_dir = output;
    ctx.out = ctx.cfg.output_dir;
    ctx.hash = config_hash(ctx.cfg);

    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "constants") return cmd_constants(ctx);
    if (cmd == "background") return cmd_background(ctx);
    if (cmd == "simulate") return cmd_simulate(ctx, Mode::viscous);
    if (cmd == "euler") return cmd_simulate(ctx, Mode::euler);
    if (cmd == "sweep") return cmd_sweep(ctx);
    if (cmd == "ode") return cmd_ode(ctx);
    if (cmd == "report") return cmd_report(ctx, report_inputs);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const BlowUpError& e) {
    std::cerr << "blow-up at t=" << e.time << ": " << e.what() << '\n';
    return kBlowUp;
  } catch (const FitError& e) {
    std::cerr << "fit failure: " << e.what() << '\n';
    return kFit;
  } catch (const PreconditionError& e) {
    std::cerr << "precondition failure: " << e.what() << '\n';
    return kPrecondition;
  } catch (const NewtonError& e) {
    std::cerr << "precondition failure: " << e.what() << '\n';
    return kPrecondition;
  } catch (const std::domain_error& e) {
    std::cerr << "precondition failure: " << e.what() << '\n';
    return kPrecondition;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kRuntime;
}
