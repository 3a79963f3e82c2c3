#pragma once

// Sectioned key-value run configuration. Missing keys take defaults; unknown
// keys and sections are rejected so typos do not silently fall back.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "vvlab/background_flow.hpp"
#include "vvlab/constants.hpp"
#include "vvlab/errors.hpp"
#include "vvlab/io.hpp"
#include "vvlab/limit_harness.hpp"
#include "vvlab/ode_bounds.hpp"
#include "vvlab/scenarios.hpp"
#include "vvlab/solver.hpp"

namespace vvlab {

struct BackgroundProbe {
  double t_max = 10.0;
  int time_count = 11;
  int points_per_axis = 5;
  double half_width = 4.0;
  int random_points = 100;
};

struct OdeRun {
  OdeParams params{3.0, 2.0, 0.0, 0.0, 1.5, -2.0, 1.0};
  double t_end = 10.0;
  double dt = 1e-3;
  int output_every = 100;
};

struct RunConfig {
  ModelParameters model;
  ConstantsVariant variant = ConstantsVariant::theorem;
  InitialVelocity velocity = InitialVelocity::identity(1);
  DensityProfile density;
  GridSpec grid{1, 512, 12.0, BoundaryMode::truncated};  // room for the default support growth to T = 8
  SolverSettings solver;
  RunSettings run{8.0, {0.25, 0.5, 1.0, 2.0, 4.0, 8.0}, 0.0, 10};
  std::vector<double> ladder{1e-2, 5e-3, 2.5e-3, 1.25e-3};
  std::vector<double> sample_fractions{0.25, 0.5, 1.0};
  bool high_regularity = false;
  int workers = 0;
  bool envelope_check = true;
  OdeRun ode;
  BackgroundProbe background;
  std::vector<std::string> report_inputs;
  std::string output_dir = "out";
  std::uint64_t seed = 1;
  int verbosity = 1;

  SweepConfig sweep_config() const {
    SweepConfig s;
    s.params = model;
    s.velocity = velocity;
    s.density = density;
    s.grid = grid;
    s.solver = solver;
    s.t_end = run.t_end;
    s.sample_fractions = sample_fractions;
    s.ladder = ladder;
    s.fixed_dt = run.fixed_dt;
    s.high_regularity = high_regularity;
    s.workers = workers;
    return s;
  }
};

namespace config_detail {

using boost::property_tree::ptree;

inline const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"model", {"gamma", "delta", "alpha", "beta", "A", "epsilon", "kappa", "variant", "stress"}},
      {"velocity", {"dim", "matrix", "shift", "perturbation", "amplitude"}},
      {"density", {"kind", "amplitude", "sigma", "radius", "truncation"}},
      {"grid", {"nodes", "half_width", "boundary"}},
      {"solver", {"cfl", "hyperdiffusion", "collar", "margin", "support_threshold", "t_end", "samples",
                  "fixed_dt", "observe_every"}},
      {"sweep", {"ladder", "fractions", "high_regularity", "workers", "envelope_check"}},
      {"ode", {"a", "b", "C1", "C2", "D1", "D2", "Z0", "t_end", "dt", "output_every"}},
      {"background", {"t_max", "time_count", "points_per_axis", "half_width", "random_points"}},
      {"report", {"inputs"}},
      {"output", {"dir"}},
      {"run", {"seed", "verbosity"}},
  };
  return s;
}

class Reader {
 public:
  explicit Reader(const ptree& pt) : pt_(pt) {
    for (const auto& [section, body] : pt_) {
      auto it = schema().find(section);
      if (it == schema().end()) throw ConfigError("unknown config section [" + section + "]");
      for (const auto& [key, _] : body)
        if (!it->second.count(key)) throw ConfigError("unknown config key " + section + "." + key);
    }
  }

  bool has(const std::string& path) const { return pt_.get_optional<std::string>(path).has_value(); }

  void num(const std::string& path, double& x) const {
    if (auto v = pt_.get_optional<std::string>(path)) x = io::parse_double(*v, path);
  }
  void integer(const std::string& path, int& x) const {
    double d = x;
    num(path, d);
    if (d != std::floor(d)) throw ConfigError(path + " must be an integer");
    x = static_cast<int>(d);
  }
  void list(const std::string& path, std::vector<double>& x) const {
    if (auto v = pt_.get_optional<std::string>(path)) x = io::parse_list(*v, path);
  }
  void flag(const std::string& path, bool& x) const {
    if (auto v = pt_.get_optional<std::string>(path)) {
      if (*v == "true" || *v == "1" || *v == "yes") x = true;
      else if (*v == "false" || *v == "0" || *v == "no") x = false;
      else throw ConfigError(path + " must be true or false");
    }
  }
  std::optional<std::string> text(const std::string& path) const {
    if (auto v = pt_.get_optional<std::string>(path)) return *v;
    return std::nullopt;
  }

 private:
  const ptree& pt_;
};

}  // namespace config_detail

inline RunConfig parse_config(const boost::property_tree::ptree& pt) {
  config_detail::Reader r(pt);
  RunConfig c;

  r.num("model.gamma", c.model.gamma);
  r.num("model.delta", c.model.delta);
  r.num("model.alpha", c.model.alpha);
  r.num("model.beta", c.model.beta);
  r.num("model.A", c.model.A);
  r.num("model.epsilon", c.model.epsilon);
  r.num("model.kappa", c.model.kappa);
  if (auto v = r.text("model.variant")) {
    if (*v == "theorem") c.variant = ConstantsVariant::theorem;
    else if (*v == "proof") c.variant = ConstantsVariant::proof;
    else throw ConfigError("model.variant must be theorem or proof");
  }
  if (auto v = r.text("model.stress")) c.solver.stress = stress_from_string(*v);

  int dim = 1;
  r.integer("velocity.dim", dim);
  if (dim < 1 || dim > 3) throw ConfigError("velocity.dim must be 1, 2 or 3");
  c.velocity = InitialVelocity::identity(dim);
  std::vector<double> m, b;
  r.list("velocity.matrix", m);
  r.list("velocity.shift", b);
  if (!m.empty()) {
    if (m.size() != static_cast<std::size_t>(dim * dim)) throw ConfigError("velocity.matrix needs dim*dim entries");
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) c.velocity.matrix(i, j) = m[i * dim + j];
  }
  if (!b.empty()) {
    if (b.size() != static_cast<std::size_t>(dim)) throw ConfigError("velocity.shift needs dim entries");
    for (int i = 0; i < dim; ++i) c.velocity.shift[i] = b[i];
  }
  if (auto v = r.text("velocity.perturbation")) c.velocity.perturbation = perturbation_from_string(*v);
  r.num("velocity.amplitude", c.velocity.amplitude);

  if (auto v = r.text("density.kind")) c.density.kind = density_kind_from_string(*v);
  r.num("density.amplitude", c.density.amplitude);
  r.num("density.sigma", c.density.sigma);
  r.num("density.radius", c.density.radius);
  r.num("density.truncation", c.density.truncation);

  c.grid.dim = dim;
  r.integer("grid.nodes", c.grid.nodes);
  r.num("grid.half_width", c.grid.half_width);
  if (auto v = r.text("grid.boundary")) c.grid.boundary = boundary_from_string(*v);

  r.num("solver.cfl", c.solver.cfl);
  r.num("solver.hyperdiffusion", c.solver.hyperdiffusion);
  r.integer("solver.collar", c.solver.collar);
  r.integer("solver.margin", c.solver.margin);
  r.num("solver.support_threshold", c.solver.support_threshold);
  r.num("solver.t_end", c.run.t_end);
  r.list("solver.samples", c.run.sample_times);
  r.num("solver.fixed_dt", c.run.fixed_dt);
  r.integer("solver.observe_every", c.run.observe_every);

  if (r.has("sweep.ladder")) r.list("sweep.ladder", c.ladder);
  r.list("sweep.fractions", c.sample_fractions);
  r.flag("sweep.high_regularity", c.high_regularity);
  r.integer("sweep.workers", c.workers);
  r.flag("sweep.envelope_check", c.envelope_check);

  r.num("ode.a", c.ode.params.a);
  r.num("ode.b", c.ode.params.b);
  r.num("ode.C1", c.ode.params.C1);
  r.num("ode.C2", c.ode.params.C2);
  r.num("ode.D1", c.ode.params.D1);
  r.num("ode.D2", c.ode.params.D2);
  r.num("ode.Z0", c.ode.params.Z0);
  r.num("ode.t_end", c.ode.t_end);
  r.num("ode.dt", c.ode.dt);
  r.integer("ode.output_every", c.ode.output_every);

  r.num("background.t_max", c.background.t_max);
  r.integer("background.time_count", c.background.time_count);
  r.integer("background.points_per_axis", c.background.points_per_axis);
  r.num("background.half_width", c.background.half_width);
  r.integer("background.random_points", c.background.random_points);

  if (auto v = r.text("report.inputs")) {
    std::istringstream in(*v);
    std::string item;
    while (std::getline(in, item, ',')) {
      const auto a = item.find_first_not_of(" \t"), z = item.find_last_not_of(" \t");
      if (a != std::string::npos) c.report_inputs.push_back(item.substr(a, z - a + 1));
    }
  }
  if (auto v = r.text("output.dir")) c.output_dir = *v;
  if (auto v = r.text("run.seed")) {
    auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), c.seed);
    if (ec != std::errc{} || ptr != v->data() + v->size())
      throw ConfigError("run.seed must be a nonnegative integer");
  }
  r.integer("run.verbosity", c.verbosity);
  return c;
}

inline RunConfig parse_config_text(const std::string& text) {
  boost::property_tree::ptree pt;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return parse_config(pt);
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

/// Canonical text form; every field is written, so parse(serialize(c)) == c.
inline std::string serialize_config(const RunConfig& c) {
  using io::format_exact;
  std::ostringstream o;
  const int d = c.velocity.dim;
  std::vector<double> m, b;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m.push_back(c.velocity.matrix(i, j));
  for (int i = 0; i < d; ++i) b.push_back(c.velocity.shift[i]);
  std::string inputs;
  for (std::size_t i = 0; i < c.report_inputs.size(); ++i) inputs += (i ? ", " : "") + c.report_inputs[i];

  o << "[model]\n"
    << "gamma = " << format_exact(c.model.gamma) << "\n"
    << "delta = " << format_exact(c.model.delta) << "\n"
    << "alpha = " << format_exact(c.model.alpha) << "\n"
    << "beta = " << format_exact(c.model.beta) << "\n"
    << "A = " << format_exact(c.model.A) << "\n"
    << "epsilon = " << format_exact(c.model.epsilon) << "\n"
    << "kappa = " << format_exact(c.model.kappa) << "\n"
    << "variant = " << (c.variant == ConstantsVariant::proof ? "proof" : "theorem") << "\n"
    << "stress = " << to_string(c.solver.stress) << "\n\n"
    << "[velocity]\n"
    << "dim = " << d << "\n"
    << "matrix = " << io::format_list(m) << "\n"
    << "shift = " << io::format_list(b) << "\n"
    << "perturbation = " << to_string(c.velocity.perturbation) << "\n"
    << "amplitude = " << format_exact(c.velocity.amplitude) << "\n\n"
    << "[density]\n"
    << "kind = " << to_string(c.density.kind) << "\n"
    << "amplitude = " << format_exact(c.density.amplitude) << "\n"
    << "sigma = " << format_exact(c.density.sigma) << "\n"
    << "radius = " << format_exact(c.density.radius) << "\n"
    << "truncation = " << format_exact(c.density.truncation) << "\n\n"
    << "[grid]\n"
    << "nodes = " << c.grid.nodes << "\n"
    << "half_width = " << format_exact(c.grid.half_width) << "\n"
    << "boundary = " << to_string(c.grid.boundary) << "\n\n"
    << "[solver]\n"
    << "cfl = " << format_exact(c.solver.cfl) << "\n"
    << "hyperdiffusion = " << format_exact(c.solver.hyperdiffusion) << "\n"
    << "collar = " << c.solver.collar << "\n"
    << "margin = " << c.solver.margin << "\n"
    << "support_threshold = " << format_exact(c.solver.support_threshold) << "\n"
    << "t_end = " << format_exact(c.run.t_end) << "\n"
    << "samples = " << io::format_list(c.run.sample_times) << "\n"
    << "fixed_dt = " << format_exact(c.run.fixed_dt) << "\n"
    << "observe_every = " << c.run.observe_every << "\n\n"
    << "[sweep]\n"
    << "ladder = " << io::format_list(c.ladder) << "\n"
    << "fractions = " << io::format_list(c.sample_fractions) << "\n"
    << "high_regularity = " << (c.high_regularity ? "true" : "false") << "\n"
    << "workers = " << c.workers << "\n"
    << "envelope_check = " << (c.envelope_check ? "true" : "false") << "\n\n"
    << "[ode]\n"
    << "a = " << format_exact(c.ode.params.a) << "\n"
    << "b = " << format_exact(c.ode.params.b) << "\n"
    << "C1 = " << format_exact(c.ode.params.C1) << "\n"
    << "C2 = " << format_exact(c.ode.params.C2) << "\n"
    << "D1 = " << format_exact(c.ode.params.D1) << "\n"
    << "D2 = " << format_exact(c.ode.params.D2) << "\n"
    << "Z0 = " << format_exact(c.ode.params.Z0) << "\n"
    << "t_end = " << format_exact(c.ode.t_end) << "\n"
    << "dt = " << format_exact(c.ode.dt) << "\n"
    << "output_every = " << c.ode.output_every << "\n\n"
    << "[background]\n"
    << "t_max = " << format_exact(c.background.t_max) << "\n"
    << "time_count = " << c.background.time_count << "\n"
    << "points_per_axis = " << c.background.points_per_axis << "\n"
    << "half_width = " << format_exact(c.background.half_width) << "\n"
    << "random_points = " << c.background.random_points << "\n\n"
    << "[report]\n"
    << "inputs = " << inputs << "\n\n"
    << "[output]\n"
    << "dir = " << c.output_dir << "\n\n"
    << "[run]\n"
    << "seed = " << c.seed << "\n"
    << "verbosity = " << c.verbosity << "\n";
  return o.str();
}

/// Hash of the canonical form, carried by every manifest. The output
/// directory is left out so relocated runs keep their identity.
inline std::string config_hash(RunConfig c) {
  c.output_dir.clear();
  return io::hex64(io::fnv1a(serialize_config(c)));
}

}  // namespace vvlab
