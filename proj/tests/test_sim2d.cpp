#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <memory>

#include "advfront/sim2d.hpp"
#include "advfront/spectral.hpp"

using namespace advfront;

namespace {

const FrontSetup& setup() {
  static const FrontSetup s = klausmeier_setup(std::make_shared<const KlausmeierModel>(0.1, 0.1, 2.0));
  return s;
}

const FrontProfile& stable_front() {
  static const FrontProfile f = solve_front(setup(), 0.01, 3000.0);
  return f;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("unperturbed front is a fixed point") {
  const FrontProfile& f = stable_front();
  SimConfig cfg;
  cfg.N_y = 4;
  cfg.L_y = 10.0;
  cfg.dt = 1.0;
  cfg.t_end = 1000.0;
  Simulator sim(setup(), f, cfg);
  const SimField start = sim.field();
  for (int k = 0; k < 1000; ++k) sim.step();
  CHECK(max_diff(sim.field().U, start.U) < 1e-6);
  CHECK(max_diff(sim.field().V, start.V) < 1e-6);
  const auto d = sim.diagnose();
  CHECK_FALSE(d.multivalued);
  CHECK(std::abs(d.h_mean) < 0.1 * f.mesh.spec().h0);
}

TEST_CASE("homogeneous rows stay homogeneous in y") {
  SimConfig cfg;
  cfg.N_y = 5;
  cfg.L_y = 40.0;
  cfg.dt = 1.0;
  cfg.t_end = 50.0;
  cfg.perturbation.modes = {{0, 0.3}};
  Simulator sim(setup(), stable_front(), cfg);
  for (int k = 0; k < 50; ++k) sim.step();
  const auto& F = sim.field();
  double dev = 0.0;
  for (std::size_t j = 1; j < F.n_y; ++j) {
    for (std::size_t i = 0; i < F.n_xi; ++i) dev = std::max(dev, std::abs(F.U[j * F.n_xi + i] - F.U[i]));
  }
  CHECK(dev < 1e-12);
}

TEST_CASE("uniform shift is neutral") {
  SimConfig cfg;
  cfg.N_y = 3;
  cfg.L_y = 30.0;
  cfg.dt = 1.0;
  cfg.t_end = 400.0;
  cfg.perturbation.modes = {{0, 0.05}};
  Simulator sim(setup(), stable_front(), cfg);
  const double h0 = sim.diagnose().h_mean;
  for (int k = 0; k < 400; ++k) sim.step();
  CHECK(h0 == doctest::Approx(0.05).epsilon(0.05));
  CHECK(sim.diagnose().h_mean == doctest::Approx(h0).epsilon(0.05));
}

TEST_CASE("y-reflection symmetry is preserved") {
  SimConfig cfg;
  cfg.N_y = 16;
  cfg.L_y = 2.0 * std::numbers::pi / 0.05;
  cfg.dt = 1.0;
  cfg.t_end = 100.0;
  cfg.perturbation.modes = {{1, 0.1}, {3, 0.05}};
  Simulator sim(setup(), stable_front(), cfg);
  for (int k = 0; k < 100; ++k) sim.step();
  const auto& F = sim.field();
  double asym = 0.0, scale = 0.0;
  for (std::size_t j = 1; j < F.n_y; ++j) {
    const std::size_t r = F.n_y - j;
    for (std::size_t i = 0; i < F.n_xi; ++i) {
      asym = std::max(asym, std::abs(F.U[j * F.n_xi + i] - F.U[r * F.n_xi + i]));
      scale = std::max(scale, std::abs(F.U[j * F.n_xi + i] - F.U[i]));
    }
  }
  CHECK(scale > 1e-4);
  CHECK(asym < 1e-10);
}

TEST_CASE("results do not depend on the worker count") {
  SimConfig cfg;
  cfg.N_y = 8;
  cfg.L_y = 100.0;
  cfg.dt = 1.0;
  cfg.t_end = 20.0;
  cfg.perturbation.noise_amplitude = 0.1;
  cfg.perturbation.noise_modes = 3;
  cfg.perturbation.seed = 7;
  cfg.workers = 1;
  const SimResult a = run_simulation(setup(), stable_front(), cfg);
  cfg.workers = 4;
  const SimResult b = run_simulation(setup(), stable_front(), cfg);
  CHECK(a.final_field.U == b.final_field.U);
  CHECK(a.final_field.V == b.final_field.V);
}

TEST_CASE("linear decay rate matches lambda_c2 ell^2") {
  const FrontProfile& f = stable_front();
  StabilityOptions so;
  so.oracle = false;
  so.asymptotic = false;
  const double l2 = stability_report(setup(), f, so).lambda2_exact;
  REQUIRE(l2 < 0);
  const double ell = 0.05;
  SimConfig cfg;
  cfg.N_y = 16;
  cfg.L_y = 2.0 * std::numbers::pi / ell;
  cfg.dt = 1.0;
  cfg.t_end = 1500.0;
  cfg.diagnostic_interval = 25.0;
  const GrowthRate g = growth_rate_check(setup(), f, cfg, 1);
  CHECK(g.ell == doctest::Approx(ell));
  CHECK(g.sigma < 0);
  CHECK(g.sigma / (l2 * ell * ell) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("snapshots carry sidecars and the diagnostics file") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "advfront_sim_test";
  fs::remove_all(dir);
  SimConfig cfg;
  cfg.N_y = 4;
  cfg.L_y = 20.0;
  cfg.dt = 1.0;
  cfg.t_end = 4.0;
  cfg.snapshot_interval = 2.0;
  cfg.output_dir = dir.string();
  const SimResult r = run_simulation(setup(), stable_front(), cfg);
  CHECK(r.steps == 4);
  CHECK(fs::exists(dir / "interface.csv"));
  for (const char* s : {"00000000", "00000002", "00000004"}) {
    for (const char* v : {"U", "V"}) {
      const fs::path bin = dir / (std::string("snapshot_") + s + "_" + v + ".bin");
      CHECK(fs::exists(bin));
      CHECK(fs::file_size(bin) == 8 * stable_front().size() * 4);
      const Json j = Json::parse(read_file(bin.string() + ".json"));
      CHECK(j.contains("grid"));
      CHECK(j.contains("config"));
    }
  }
  const CsvTable t = read_csv((dir / "interface.csv").string());
  CHECK(t.rows.size() == 5);
  CHECK(t.header["classification"] == "flat");
  fs::remove_all(dir);
}

TEST_CASE("configuration errors are rejected") {
  SimConfig cfg;
  cfg.N_y = 2;
  CHECK_THROWS_AS(Simulator(setup(), stable_front(), cfg), InputError);
  cfg.N_y = 8;
  cfg.nu = 5.0;
  CHECK_THROWS_AS(Simulator(setup(), stable_front(), cfg), InputError);
  CHECK_THROWS_AS(parse_time_scheme("rk4"), InputError);
}
