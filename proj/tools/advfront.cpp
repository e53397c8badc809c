#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "advfront/acceptance.hpp"
#include "advfront/config.hpp"

using namespace advfront;

namespace {

constexpr int kOk = 0, kConfigError = 2, kNumericalError = 3, kAcceptanceFailure = 4;

struct Context {
  std::string command;
  RunConfig cfg;
  bool verbose = false;
  std::vector<std::string> written;

  void log(const std::string& msg) const {
    if (verbose) std::cerr << "[" << command << "] " << msg << "\n";
  }
  std::string path(const std::string& name) const { return cfg.output_dir + "/" + name; }
  Json header(const std::string& kind) const {
    return Json{{"kind", kind}, {"command", command}, {"config", to_json(cfg)}};
  }
  void csv(const std::string& name, const std::string& kind, const std::vector<std::string>& cols,
           const std::vector<std::vector<double>>& rows, Json extra = Json::object()) {
    Json h = header(kind);
    for (const auto& [k, v] : extra.items()) h[k] = v;
    write_csv(path(name), h, cols, rows);
    written.push_back(path(name));
  }
  void json(const std::string& name, const std::string& kind, const Json& result) {
    Json doc = header(kind);
    doc["result"] = result;
    doc["content_sha256"] = sha256_hex(result.dump());
    write_file(path(name), doc.dump(2) + "\n");
    written.push_back(path(name));
  }
};

std::vector<double> nu_list(const RunConfig& c) {
  return c.nu_values.empty() ? std::vector<double>{c.nu} : c.nu_values;
}

// Front at each requested nu, continued from the previous one.
template <class Fn>
void along_nu(const Context& ctx, const FrontSetup& setup, Fn&& body) {
  FrontProfile warm;
  for (double nu : nu_list(ctx.cfg)) {
    if (warm.size() > 0 && warm.nu != nu) {
      const FrontBranch br = continue_front(setup, warm, ContinuationParameter::Nu, nu, {}, ctx.cfg.front);
      warm = br.completed ? br.points.back().profile : solve_front(setup, ctx.cfg.delta, nu, ctx.cfg.front);
    } else if (warm.size() == 0) {
      warm = solve_front(setup, ctx.cfg.delta, nu, ctx.cfg.front);
    }
    ctx.log("nu = " + format_double(nu) + ", c = " + format_double(warm.c));
    body(warm);
  }
}

void cmd_steady(Context& ctx) {
  const ModelPtr m = make_model(ctx.cfg.model, ctx.cfg.mu);
  const SteadyStateResult res = find_steady_states(*m);
  std::vector<std::vector<double>> rows;
  std::vector<std::string> branches;
  for (const auto& s : res.states) {
    rows.push_back({s.U, s.V, s.jac.Fu, s.jac.Fv, s.jac.Gu, s.jac.Gv, s.kappa, s.bistable_admissible ? 1.0 : 0.0});
    branches.push_back(s.branch);
  }
  Json extra{{"branches", branches}};
  if (res.note) extra["note"] = *res.note;
  ctx.csv("steady.csv", "steady_states", {"U", "V", "Fu", "Fv", "Gu", "Gv", "kappa", "bistable_admissible"},
          rows, extra);
}

void cmd_dispersion(Context& ctx) {
  const ModelPtr m = make_model(ctx.cfg.model, ctx.cfg.mu);
  const SteadyStateResult res = find_steady_states(*m);
  std::vector<std::vector<double>> rows;
  Json warnings = Json::array();
  for (std::size_t k = 0; k < res.states.size(); ++k) {
    for (double nu : nu_list(ctx.cfg)) {
      const auto rep = check_equilibrium_stability(res.states[k], ctx.cfg.delta, nu, ctx.cfg.dispersion);
      rows.push_back({static_cast<double>(k), nu, rep.stable ? 1.0 : 0.0, rep.worst_margin, rep.argmin_k,
                      rep.argmin_ell, rep.k_max, rep.ell_max});
      for (const auto& w : rep.warnings) warnings.push_back("state " + std::to_string(k) + ": " + w);
    }
  }
  ctx.csv("dispersion.csv", "equilibrium_stability",
          {"state", "nu", "stable", "worst_margin", "argmin_k", "argmin_ell", "k_max", "ell_max"}, rows,
          {{"warnings", warnings}});
}

void cmd_layer(Context& ctx) {
  const FrontSetup setup = make_setup(ctx.cfg);
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < ctx.cfg.layer_v.size(); ++k) {
    const double v = ctx.cfg.layer_v[k];
    const LayerFront L = solve_layer_front(*setup.model, v, setup.branch_minus, setup.branch_plus);
    const WeightedIntegrals w = weighted_integrals(L, *setup.model);
    rows.push_back({v, L.c_star, L.u_minus, L.u_plus, w.F_star, w.G_star, w.N_star});
    std::vector<std::vector<double>> prof;
    for (std::size_t j = 0; j < L.xi.size(); ++j) prof.push_back({L.xi[j], L.u[j], L.p[j]});
    ctx.csv("layer_" + std::to_string(k) + ".csv", "layer_profile", {"xi", "u", "p"}, prof,
            {{"v_star", format_double(v)}, {"c_star", format_double(L.c_star)}});
  }
  ctx.csv("layer.csv", "layer_fronts", {"v_star", "c_star", "u_minus", "u_plus", "F_star", "G_star", "N_star"},
          rows);
}

void cmd_singular(Context& ctx) {
  const FrontSetup setup = make_setup(ctx.cfg);
  std::vector<std::vector<double>> rows;
  for (double nu : nu_list(ctx.cfg)) {
    const SingularSkeleton sk = singular_skeleton(setup, ctx.cfg.delta, nu, ctx.cfg.thresholds);
    const auto& r = sk.report;
    rows.push_back({nu, static_cast<double>(sk.regime.tag), r.v_star, r.c_star, r.lambda2,
                    static_cast<double>(r.criterion_sign), r.error_bound, r.M_G_limit, r.M_G2_limit,
                    r.M_full_limit, r.nu_crit_G, r.nu_crit_G2, r.nu_crit_full});
  }
  ctx.csv("singular_criteria.csv", "singular_criteria",
          {"nu", "regime", "v_star", "c_star", "lambda2_asymptotic", "criterion_sign", "error_bound", "M_G",
           "M_G2", "M_full", "nu_crit_G", "nu_crit_G2", "nu_crit_full"},
          rows, {{"regime_codes", {"weak", "intermediate", "strong"}}});
}

void cmd_front(Context& ctx) {
  const FrontSetup setup = make_setup(ctx.cfg);
  const FrontProfile f = solve_front(setup, ctx.cfg.delta, ctx.cfg.nu, ctx.cfg.front);
  ctx.log("c = " + format_double(f.c) + ", residual = " + format_double(f.residual));
  save_front(f, ctx.path("front.csv"), ctx.header("front_profile"));
  ctx.written.push_back(ctx.path("front.csv"));
}

void cmd_continue(Context& ctx) {
  const FrontSetup setup = make_setup(ctx.cfg);
  const FrontProfile start = solve_front(setup, ctx.cfg.delta, ctx.cfg.nu, ctx.cfg.front);
  const FrontBranch br = continue_front(setup, start, ctx.cfg.continuation_parameter, ctx.cfg.continuation_target,
                                        ctx.cfg.continuation, ctx.cfg.front);
  std::vector<std::vector<double>> rows;
  std::size_t saved = 0;
  for (const auto& p : br.points) {
    rows.push_back({p.parameter, p.profile.c, interface_position(p.profile), p.profile.residual, p.step});
    for (double cp : ctx.cfg.continuation.checkpoints) {
      if (p.parameter == cp) {
        const std::string name = "front_" + std::to_string(saved++) + ".csv";
        save_front(p.profile, ctx.path(name), ctx.header("front_profile"));
        ctx.written.push_back(ctx.path(name));
      }
    }
  }
  ctx.csv("branch.csv", "front_branch", {"parameter", "c", "interface", "residual", "step"}, rows,
          {{"parameter", to_string(br.parameter)}, {"completed", br.completed}, {"termination", br.termination}});
  if (!br.completed) throw NumericalError("continuation stopped: " + br.termination);
}

void cmd_lambda2(Context& ctx) {
  const FrontSetup setup = make_setup(ctx.cfg);
  const StabilityOptions so = stability_options(ctx.cfg);
  std::vector<std::vector<double>> rows;
  along_nu(ctx, setup, [&](const FrontProfile& f) {
    const StabilityReport r = stability_report(setup, f, so);
    ctx.log("lambda_c2 = " + format_double(r.lambda2_exact));
    rows.push_back({r.nu, static_cast<double>(r.regime), r.c, r.lambda2_exact, r.lambda2_discrete,
                    r.lambda2_oracle.value_or(std::nan("")), r.relative_gap, r.lambda2_asymptotic,
                    r.adjoint_residual, r.adjoint_continuous_residual, r.next_eigenvalue, r.mesh_drift});
  });
  ctx.csv("lambda2.csv", "lambda_c2_branch",
          {"nu", "regime", "c", "lambda2_exact", "lambda2_discrete", "lambda2_oracle", "relative_gap",
           "lambda2_asymptotic", "adjoint_residual", "adjoint_continuous_residual", "next_eigenvalue",
           "mesh_drift"},
          rows, {{"delta", format_double(ctx.cfg.delta)}, {"regime_codes", {"weak", "intermediate", "strong"}}});
}

void cmd_contour(Context& ctx) {
  const FrontSetup setup = make_setup(ctx.cfg);
  const ContourResult c = zero_contour(setup, ctx.cfg.contour_deltas, contour_options(ctx.cfg));
  std::vector<std::vector<double>> rows;
  for (const auto& p : c.points) {
    rows.push_back({p.delta, p.nu_star, p.nu_crit_asymptotic, static_cast<double>(p.evaluations)});
  }
  Json extra = Json::object();
  if (c.points.size() >= 2) {
    std::printf("slope %.6f\n", c.slope);
    extra = {{"slope", format_double(c.slope)}, {"intercept", format_double(c.intercept)}};
  }
  ctx.csv("contour.csv", "zero_contour", {"delta", "nu_star", "nu_crit_asymptotic", "evaluations"}, rows, extra);
}

void cmd_simulate(Context& ctx) {
  const FrontSetup setup = make_setup(ctx.cfg);
  const FrontProfile f = solve_front(setup, ctx.cfg.delta, ctx.cfg.nu, ctx.cfg.front);
  SimConfig sc = ctx.cfg.sim;
  sc.delta = f.delta;
  sc.nu = f.nu;
  sc.output_dir = ctx.path("sim");
  if (ctx.cfg.growth_mode > 0) {
    const GrowthRate g = growth_rate_check(setup, f, sc, ctx.cfg.growth_mode);
    StabilityOptions so = stability_options(ctx.cfg);
    so.oracle = false;
    const StabilityReport r = stability_report(setup, f, so);
    const double pred = r.lambda2_exact * g.ell * g.ell;
    ctx.json("growth.json", "growth_rate",
             {{"mode", g.mode},
              {"ell", format_double(g.ell)},
              {"sigma", format_double(g.sigma)},
              {"lambda2_ell2", format_double(pred)},
              {"ratio", format_double(g.sigma / pred)},
              {"t_start", format_double(g.t_start)},
              {"t_end", format_double(g.t_end)},
              {"fit_residual", format_double(g.fit_residual)}});
    ctx.written.push_back(ctx.path("sim/interface.csv"));
    return;
  }
  const SimResult res = run_simulation(setup, f, sc);
  ctx.log("classification " + to_string(res.classification));
  ctx.written.insert(ctx.written.end(), res.files.begin(), res.files.end());
  ctx.json("simulation.json", "simulation_summary",
           {{"classification", to_string(res.classification)},
            {"dt", format_double(res.dt)},
            {"steps", res.steps},
            {"warnings", res.warnings},
            {"files", res.files}});
}

int cmd_validate(Context& ctx, const std::vector<int>& only) {
  AcceptanceOptions opt;
  opt.only = only;
  opt.on_result = [](const CriterionResult& r) {
    std::printf("%s\n", format_line(r).c_str());
    for (const auto& n : r.notes) std::printf("    note: %s\n", n.c_str());
    std::fflush(stdout);
  };
  const auto results = run_acceptance(opt);
  Json arr = Json::array();
  bool all = true;
  for (const auto& r : results) {
    arr.push_back(to_json(r));
    all = all && r.pass;
  }
  ensure_directory(ctx.cfg.output_dir);
  ctx.json("acceptance.json", "acceptance", arr);
  return all ? kOk : kAcceptanceFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Traveling fronts in two-component reaction-diffusion-advection systems"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  bool verbose = false;
  std::vector<int> only;
  app.add_option("-c,--config", config_path, "YAML run configuration");
  app.add_option("-o,--out", out_dir, "Output directory (overrides output.directory)");
  app.add_flag("-v,--verbose", verbose, "Progress messages on stderr");

  const std::vector<std::pair<std::string, std::string>> commands{
      {"steady", "Homogeneous steady states and their Jacobians"},
      {"dispersion", "Stability of the steady states against 2D Fourier modes"},
      {"layer", "Fast layer fronts at the configured jump levels"},
      {"singular-criteria", "Singular-limit regime, lambda_c2 and critical advection"},
      {"front", "Traveling front at (delta, nu)"},
      {"continue", "Continuation of the front in one parameter"},
      {"lambda2", "lambda_c2 along the configured nu values"},
      {"contour", "Zero contour nu*(delta) and its log-log slope"},
      {"simulate", "Comoving-frame 2D simulation with interface diagnostics"},
      {"validate", "Acceptance suite"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->fallthrough();
    if (name == "validate") sub->add_option("--only", only, "Criterion numbers to run");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  Context ctx;
  ctx.command = app.get_subcommands().front()->get_name();
  ctx.verbose = verbose;
  try {
    if (!config_path.empty()) {
      ctx.cfg = load_run_config(config_path);
    } else if (ctx.command != "validate") {
      throw InputError("--config is required for '" + ctx.command + "'");
    }
    if (!out_dir.empty()) ctx.cfg.output_dir = out_dir;
    if (ctx.command == "validate") return cmd_validate(ctx, only);

    ensure_directory(ctx.cfg.output_dir);
    if (ctx.command == "steady") cmd_steady(ctx);
    else if (ctx.command == "dispersion") cmd_dispersion(ctx);
    else if (ctx.command == "layer") cmd_layer(ctx);
    else if (ctx.command == "singular-criteria") cmd_singular(ctx);
    else if (ctx.command == "front") cmd_front(ctx);
    else if (ctx.command == "continue") cmd_continue(ctx);
    else if (ctx.command == "lambda2") cmd_lambda2(ctx);
    else if (ctx.command == "contour") cmd_contour(ctx);
    else if (ctx.command == "simulate") cmd_simulate(ctx);
    for (const auto& p : ctx.written) std::printf("wrote %s\n", p.c_str());
    return kOk;
  } catch (const InputError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kNumericalError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "failure: %s\n", e.what());
    return kNumericalError;
  }
}
