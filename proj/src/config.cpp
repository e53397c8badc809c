#include "advfront/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace advfront {

namespace {

std::string where(const YAML::Node& n, const std::string& source) {
  std::ostringstream os;
  os << source;
  if (n.Mark().line >= 0) os << ":" << n.Mark().line + 1;
  return os.str();
}

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  void check_keys(const YAML::Node& map, const std::string& section, const std::set<std::string>& allowed) const {
    if (!map) return;
    if (!map.IsMap()) throw InputError(where(map, source_) + ": section '" + section + "' must be a mapping");
    for (const auto& kv : map) {
      const std::string key = kv.first.as<std::string>();
      if (!allowed.count(key)) {
        throw InputError(where(kv.first, source_) + ": unknown key '" + key + "' in section '" + section + "'");
      }
    }
  }

  template <class T>
  void get(const YAML::Node& map, const std::string& key, T& out, const std::string& section) const {
    if (!map || !map[key]) return;
    const YAML::Node n = map[key];
    try {
      out = n.as<T>();
    } catch (const YAML::Exception&) {
      throw InputError(where(n, source_) + ": bad value for '" + section + "." + key + "'");
    }
  }

  void positive(const YAML::Node& map, const std::string& key, double& out, const std::string& section) const {
    get(map, key, out, section);
    if (map && map[key] && !(out > 0)) {
      throw InputError(where(map[key], source_) + ": '" + section + "." + key + "' must be positive");
    }
  }

  const std::string& source() const { return source_; }

 private:
  std::string source_;
};

std::vector<double> expand_range(const YAML::Node& n, const Reader& r) {
  r.check_keys(n, "params.nu_range", {"start", "stop", "count", "spacing"});
  double a = 0, b = 0;
  int count = 0;
  std::string spacing = "linear";
  r.get(n, "start", a, "params.nu_range");
  r.get(n, "stop", b, "params.nu_range");
  r.get(n, "count", count, "params.nu_range");
  r.get(n, "spacing", spacing, "params.nu_range");
  if (count < 1) throw InputError(where(n, r.source()) + ": params.nu_range is empty (count < 1)");
  if (spacing != "linear" && spacing != "log") {
    throw InputError(where(n, r.source()) + ": params.nu_range.spacing must be linear or log");
  }
  if (spacing == "log" && !(a > 0 && b > 0)) {
    throw InputError(where(n, r.source()) + ": log spacing needs positive start and stop");
  }
  std::vector<double> out;
  for (int k = 0; k < count; ++k) {
    const double t = count == 1 ? 0.0 : static_cast<double>(k) / (count - 1);
    out.push_back(spacing == "linear" ? a + t * (b - a) : a * std::pow(b / a, t));
  }
  return out;
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw InputError(source + ": YAML parse error: " + e.what());
  }
  RunConfig c;
  if (!root || root.IsNull()) return c;
  const Reader r(source);
  r.check_keys(root, "root",
               {"model", "params", "front", "spectral", "continuation", "contour", "dispersion", "layer", "sim",
                "output"});

  if (const YAML::Node m = root["model"]) {
    r.check_keys(m, "model", {"name", "mu", "orientation"});
    r.get(m, "name", c.model, "model");
    r.get(m, "mu", c.mu, "model");
    std::string o = "desert_left";
    r.get(m, "orientation", o, "model");
    if (o == "desert_left") {
      c.orientation = Orientation::DesertLeft;
    } else if (o == "desert_right") {
      c.orientation = Orientation::DesertRight;
    } else {
      throw InputError(where(m["orientation"], source) + ": model.orientation must be desert_left or desert_right");
    }
  }
  if (const YAML::Node p = root["params"]) {
    r.check_keys(p, "params", {"delta", "nu", "nu_values", "nu_range", "r0", "delta0", "rbar0", "deltabar0"});
    r.positive(p, "delta", c.delta, "params");
    r.get(p, "nu", c.nu, "params");
    if (c.nu < 0) throw InputError(where(p["nu"], source) + ": params.nu must be nonnegative");
    if (p["nu_values"]) {
      r.get(p, "nu_values", c.nu_values, "params");
      if (c.nu_values.empty()) throw InputError(where(p["nu_values"], source) + ": params.nu_values is empty");
    }
    if (p["nu_range"]) c.nu_values = expand_range(p["nu_range"], r);
    r.positive(p, "r0", c.thresholds.r0, "params");
    r.positive(p, "delta0", c.thresholds.delta0, "params");
    r.positive(p, "rbar0", c.thresholds.rbar0, "params");
    r.positive(p, "deltabar0", c.thresholds.deltabar0, "params");
  }
  if (const YAML::Node f = root["front"]) {
    r.check_keys(f, "front", {"h0", "alpha", "decay_lengths", "L_min", "max_newton", "tolerance", "recenter_rounds",
                              "refine_tolerance", "max_refinements"});
    r.positive(f, "h0", c.front.h0, "front");
    r.get(f, "alpha", c.front.alpha, "front");
    if (c.front.alpha < 0) throw InputError(where(f["alpha"], source) + ": front.alpha must be nonnegative");
    r.positive(f, "decay_lengths", c.front.decay_lengths, "front");
    r.positive(f, "L_min", c.front.L_min, "front");
    r.get(f, "max_newton", c.front.max_newton, "front");
    r.positive(f, "tolerance", c.front.tolerance, "front");
    r.get(f, "recenter_rounds", c.front.recenter_rounds, "front");
    r.get(f, "refine_tolerance", c.front.refine_tolerance, "front");
    r.get(f, "max_refinements", c.front.max_refinements, "front");
  }
  if (const YAML::Node s = root["spectral"]) {
    r.check_keys(s, "spectral", {"ell0", "max_iterations", "eigen_tolerance", "simplicity_gap", "ell_points",
                                 "window_rtol", "window_atol", "max_halvings", "oracle", "mesh_check"});
    r.get(s, "ell0", c.spectral.ell0, "spectral");
    r.get(s, "max_iterations", c.spectral.max_iterations, "spectral");
    r.positive(s, "eigen_tolerance", c.spectral.eigen_tolerance, "spectral");
    r.positive(s, "simplicity_gap", c.spectral.simplicity_gap, "spectral");
    r.get(s, "ell_points", c.spectral.ell_points, "spectral");
    r.get(s, "window_rtol", c.spectral.window_rtol, "spectral");
    r.get(s, "window_atol", c.spectral.window_atol, "spectral");
    r.get(s, "max_halvings", c.spectral.max_halvings, "spectral");
    r.get(s, "oracle", c.oracle, "spectral");
    r.get(s, "mesh_check", c.mesh_check, "spectral");
    if (c.spectral.ell_points < 2) throw InputError(where(s, source) + ": spectral.ell_points must be at least 2");
  }
  if (const YAML::Node k = root["continuation"]) {
    r.check_keys(k, "continuation", {"parameter", "target", "checkpoints", "initial_step", "max_step", "grow"});
    std::string name = "nu";
    r.get(k, "parameter", name, "continuation");
    c.continuation_parameter = parse_continuation_parameter(name);
    r.get(k, "target", c.continuation_target, "continuation");
    r.get(k, "checkpoints", c.continuation.checkpoints, "continuation");
    r.get(k, "initial_step", c.continuation.initial_step, "continuation");
    r.get(k, "max_step", c.continuation.max_step, "continuation");
    r.positive(k, "grow", c.continuation.grow, "continuation");
  }
  if (const YAML::Node k = root["contour"]) {
    r.check_keys(k, "contour", {"deltas", "rel_tolerance", "max_evaluations", "bracket_factor"});
    r.get(k, "deltas", c.contour_deltas, "contour");
    if (c.contour_deltas.empty()) throw InputError(where(k, source) + ": contour.deltas is empty");
    for (double d : c.contour_deltas) {
      if (!(d > 0)) throw InputError(where(k["deltas"], source) + ": contour.deltas must be positive");
    }
    r.positive(k, "rel_tolerance", c.contour_rel_tolerance, "contour");
    r.get(k, "max_evaluations", c.contour_max_evaluations, "contour");
    r.positive(k, "bracket_factor", c.contour_bracket_factor, "contour");
  }
  if (const YAML::Node d = root["dispersion"]) {
    r.check_keys(d, "dispersion", {"k_max", "ell_max", "decades", "n_grid"});
    r.get(d, "k_max", c.dispersion.k_max, "dispersion");
    r.get(d, "ell_max", c.dispersion.ell_max, "dispersion");
    r.positive(d, "decades", c.dispersion.decades, "dispersion");
    r.get(d, "n_grid", c.dispersion.n_grid, "dispersion");
    if (c.dispersion.n_grid < 2) throw InputError(where(d, source) + ": dispersion.n_grid must be at least 2");
  }
  if (const YAML::Node l = root["layer"]) {
    r.check_keys(l, "layer", {"v_star"});
    r.get(l, "v_star", c.layer_v, "layer");
    if (c.layer_v.empty()) throw InputError(where(l, source) + ": layer.v_star is empty");
  }
  if (const YAML::Node s = root["sim"]) {
    r.check_keys(s, "sim", {"L_y", "N_y", "dt", "probe_factor", "t_end", "scheme", "xi_boundary", "perturbation",
                            "diagnostic_interval", "diag_modes", "snapshot_interval", "growth_mode", "c"});
    r.positive(s, "L_y", c.sim.L_y, "sim");
    r.get(s, "N_y", c.sim.N_y, "sim");
    r.positive(s, "dt", c.sim.dt, "sim");
    r.positive(s, "probe_factor", c.sim.probe_factor, "sim");
    r.positive(s, "t_end", c.sim.t_end, "sim");
    r.get(s, "c", c.sim.c, "sim");
    std::string scheme = to_string(c.sim.scheme), bc = to_string(c.sim.xi_boundary);
    r.get(s, "scheme", scheme, "sim");
    r.get(s, "xi_boundary", bc, "sim");
    c.sim.scheme = parse_time_scheme(scheme);
    c.sim.xi_boundary = parse_xi_boundary(bc);
    r.positive(s, "diagnostic_interval", c.sim.diagnostic_interval, "sim");
    r.get(s, "diag_modes", c.sim.diag_modes, "sim");
    r.get(s, "snapshot_interval", c.sim.snapshot_interval, "sim");
    r.get(s, "growth_mode", c.growth_mode, "sim");
    if (const YAML::Node p = s["perturbation"]) {
      r.check_keys(p, "sim.perturbation", {"modes", "noise_amplitude", "noise_modes", "seed"});
      if (const YAML::Node modes = p["modes"]) {
        if (!modes.IsSequence()) throw InputError(where(modes, source) + ": sim.perturbation.modes must be a list");
        for (const auto& m : modes) {
          r.check_keys(m, "sim.perturbation.modes[]", {"m", "amplitude"});
          int idx = 0;
          double amp = 0.0;
          r.get(m, "m", idx, "sim.perturbation.modes[]");
          r.get(m, "amplitude", amp, "sim.perturbation.modes[]");
          if (idx < 0) throw InputError(where(m, source) + ": perturbation mode index must be nonnegative");
          c.sim.perturbation.modes.emplace_back(idx, amp);
        }
      }
      r.get(p, "noise_amplitude", c.sim.perturbation.noise_amplitude, "sim.perturbation");
      r.get(p, "noise_modes", c.sim.perturbation.noise_modes, "sim.perturbation");
      r.get(p, "seed", c.sim.perturbation.seed, "sim.perturbation");
    }
    if (c.sim.N_y < 1 || c.sim.N_y == 2) throw InputError(where(s, source) + ": sim.N_y must be 1 or at least 3");
  }
  if (const YAML::Node o = root["output"]) {
    r.check_keys(o, "output", {"directory", "json"});
    r.get(o, "directory", c.output_dir, "output");
    r.get(o, "json", c.write_json, "output");
    if (c.output_dir.empty()) throw InputError(where(o, source) + ": output.directory is empty");
  }
  make_model(c.model, c.mu);  // validates name and parameter count
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw InputError(std::string("cannot read config: ") + e.what());
  }
  return parse_run_config(text, path);
}

Json to_json(const RunConfig& c) {
  auto nums = [](const std::vector<double>& v) {
    Json a = Json::array();
    for (double x : v) a.push_back(format_double(x));
    return a;
  };
  Json j;
  j["model"] = {{"name", c.model},
                {"mu", nums(c.mu)},
                {"orientation", c.orientation == Orientation::DesertLeft ? "desert_left" : "desert_right"}};
  j["params"] = {{"delta", format_double(c.delta)},
                 {"nu", format_double(c.nu)},
                 {"nu_values", nums(c.nu_values)},
                 {"r0", format_double(c.thresholds.r0)},
                 {"delta0", format_double(c.thresholds.delta0)},
                 {"rbar0", format_double(c.thresholds.rbar0)},
                 {"deltabar0", format_double(c.thresholds.deltabar0)}};
  j["front"] = {{"h0", format_double(c.front.h0)},
                {"alpha", format_double(c.front.alpha)},
                {"decay_lengths", format_double(c.front.decay_lengths)},
                {"L_min", format_double(c.front.L_min)},
                {"max_newton", c.front.max_newton},
                {"tolerance", format_double(c.front.tolerance)},
                {"recenter_rounds", c.front.recenter_rounds},
                {"refine_tolerance", format_double(c.front.refine_tolerance)},
                {"max_refinements", c.front.max_refinements}};
  j["spectral"] = {{"ell0", format_double(c.spectral.ell0)},
                   {"max_iterations", c.spectral.max_iterations},
                   {"eigen_tolerance", format_double(c.spectral.eigen_tolerance)},
                   {"simplicity_gap", format_double(c.spectral.simplicity_gap)},
                   {"ell_points", c.spectral.ell_points},
                   {"window_rtol", format_double(c.spectral.window_rtol)},
                   {"window_atol", format_double(c.spectral.window_atol)},
                   {"max_halvings", c.spectral.max_halvings},
                   {"oracle", c.oracle},
                   {"mesh_check", c.mesh_check}};
  j["continuation"] = {{"parameter", to_string(c.continuation_parameter)},
                       {"target", format_double(c.continuation_target)},
                       {"checkpoints", nums(c.continuation.checkpoints)},
                       {"initial_step", format_double(c.continuation.initial_step)},
                       {"max_step", format_double(c.continuation.max_step)},
                       {"grow", format_double(c.continuation.grow)}};
  j["contour"] = {{"deltas", nums(c.contour_deltas)},
                  {"rel_tolerance", format_double(c.contour_rel_tolerance)},
                  {"max_evaluations", c.contour_max_evaluations},
                  {"bracket_factor", format_double(c.contour_bracket_factor)}};
  j["dispersion"] = {{"k_max", format_double(c.dispersion.k_max)},
                     {"ell_max", format_double(c.dispersion.ell_max)},
                     {"decades", format_double(c.dispersion.decades)},
                     {"n_grid", c.dispersion.n_grid}};
  j["layer"] = {{"v_star", nums(c.layer_v)}};
  j["sim"] = to_json(c.sim);
  j["sim"]["growth_mode"] = c.growth_mode;
  j["output"] = {{"directory", c.output_dir}, {"json", c.write_json}};
  return j;
}

FrontSetup make_setup(const RunConfig& c) {
  const ModelPtr m = make_model(c.model, c.mu);
  auto k = std::dynamic_pointer_cast<const KlausmeierModel>(m);
  if (!k) throw InputError("front setups are available for the klausmeier model only");
  return klausmeier_setup(k, c.orientation);
}

StabilityOptions stability_options(const RunConfig& c) {
  StabilityOptions s;
  s.front = c.front;
  s.spectral = c.spectral;
  s.oracle = c.oracle;
  s.mesh_check = c.mesh_check;
  return s;
}

ContourOptions contour_options(const RunConfig& c) {
  ContourOptions o;
  o.stability = stability_options(c);
  o.stability.oracle = false;
  o.rel_tolerance = c.contour_rel_tolerance;
  o.max_evaluations = c.contour_max_evaluations;
  o.bracket_factor = c.contour_bracket_factor;
  return o;
}

}  // namespace advfront
