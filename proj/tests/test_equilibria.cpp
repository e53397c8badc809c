#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <random>

#include "advfront/equilibria.hpp"

using namespace advfront;

namespace {
SteadyState upper(double mu3) {
  KlausmeierModel m(0.1, 0.1, mu3);
  return find_steady_states(m).states.at(2);
}
SteadyState desert() {
  KlausmeierModel m(0.1, 0.1, 2.0);
  return find_steady_states(m).states.at(0);
}
}  // namespace

TEST_CASE("dispersion coefficients at k = l = 0 and nu = 0") {
  const SteadyState s = upper(2.0);
  const auto d = dispersion_coefficients(s, 0.01, 300.0, 0.0, 0.0);
  CHECK(d.p1 == doctest::Approx(-s.jac.Fu - s.jac.Gv));
  CHECK(d.p2 == doctest::Approx(s.jac.det()));
  CHECK(d.q1 == 0.0);
  CHECK(d.q2 == 0.0);
  const auto e = dispersion_coefficients(s, 0.01, 0.0, 1.3, 0.4);
  CHECK(e.q1 == 0.0);
  CHECK(e.q2 == 0.0);
  const auto f = dispersion_coefficients(desert(), 0.01, 0.0, 0.0, 0.0);
  CHECK(f.p2 == doctest::Approx(0.1).epsilon(1e-14));
}

TEST_CASE("parity of the dispersion coefficients") {
  const SteadyState s = upper(2.0);
  const double k = 0.37, l = 1.9, nu = 50;
  const auto a = dispersion_coefficients(s, 0.02, nu, k, l);
  const auto b = dispersion_coefficients(s, 0.02, nu, -k, l);
  const auto c = dispersion_coefficients(s, 0.02, nu, k, -l);
  CHECK(a.q1 == -nu * k);
  CHECK(a.p1 == b.p1);
  CHECK(a.p2 == b.p2);
  CHECK(a.q1 == -b.q1);
  CHECK(a.q2 == -b.q2);
  CHECK(a.p1 == c.p1);
  CHECK(a.p2 == c.p2);
  CHECK(a.q2 == c.q2);
}

TEST_CASE("Routh-type margin agrees with the direct roots") {
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> J(-3.0, 3.0), K(0.0, 4.0), D(0.05, 1.0), N(0.0, 20.0);
  int checked = 0;
  for (int i = 0; i < 10000; ++i) {
    Jacobian j{J(rng), J(rng), J(rng), J(rng)};
    const auto d = dispersion_coefficients(j, D(rng), N(rng), K(rng), K(rng));
    const auto [r1, r2] = d.roots();
    const double re = std::max(r1.real(), r2.real());
    const double scale = 1.0 + std::abs(d.p1) + std::sqrt(std::abs(d.p2) + std::abs(d.q2));
    if (std::abs(re) < 1e-9 * scale) continue;
    ++checked;
    CHECK((re < 0) == (d.margin() > 0));
  }
  CHECK(checked > 9900);
}

TEST_CASE("desert state is stable for all advection strengths") {
  for (double nu : {0.0, 1e3, 1e5}) {
    const auto rep = check_equilibrium_stability(desert(), 0.01, nu);
    CHECK(rep.stable);
    CHECK(rep.worst_margin > 0);
  }
}

TEST_CASE("upper state below the stability boundary is unstable") {
  const SteadyState s = upper(0.9);  // F_u exceeds 2 delta sqrt(det) at delta = 1e-3
  CHECK(!s.bistable_admissible);
  const auto rep = check_equilibrium_stability(s, 0.001, 0.0);
  CHECK(!rep.stable);
  const auto ok = check_equilibrium_stability(upper(2.0), 0.001, 0.0);
  CHECK(ok.stable);
}

TEST_CASE("negative determinant is unstable at k = l = 0") {
  SteadyState s;
  s.jac = {-1.0, 1.0, 1.0, -0.5};  // det = 0.5 - 1 < 0
  const auto d = dispersion_coefficients(s, 0.1, 0.0, 0.0, 0.0);
  CHECK(d.margin() < 0);
  CHECK(!check_equilibrium_stability(s, 0.1, 0.0).stable);
}

TEST_CASE("limits: large-nu small-k instability when G_v > 0 and l = O(delta) when F_u > 0") {
  // G_v > 0 with F_u + G_v < 0 and det > 0: stable at k = 0, unstable at small k for large nu.
  Jacobian j{-2.0, 1.0, -2.0, 0.5};
  const auto d0 = dispersion_coefficients(j, 0.1, 0.0, 0.0, 0.0);
  CHECK(d0.margin() > 0);
  const auto d1 = dispersion_coefficients(j, 0.1, 1e4, 1e-2, 0.0);
  CHECK(d1.margin() < 0);
  // F_u > 0: unstable for l of order delta at k = 0.
  Jacobian f{0.2, 1.0, -1.0, -2.0};
  const double delta = 0.01;
  CHECK(dispersion_coefficients(f, delta, 0.0, 0.0, 0.0).margin() > 0);
  CHECK(dispersion_coefficients(f, delta, 0.0, 0.0, 3 * delta).margin() < 0);
}

TEST_CASE("window below the turnover scale is rejected; boundary minimum warns") {
  EquilibriumStabilityOptions o;
  o.k_max = 1e-3;
  o.ell_max = 1e-3;
  CHECK_THROWS_AS(check_equilibrium_stability(desert(), 0.01, 0.0, o), InputError);
}

TEST_CASE("sweep result is independent of the worker count") {
  EquilibriumStabilityOptions o;
  o.keep_samples = true;
  setenv("ADVFRONT_WORKERS", "1", 1);
  const auto a = check_equilibrium_stability(upper(0.9), 0.001, 100.0, o);
  setenv("ADVFRONT_WORKERS", "3", 1);
  const auto b = check_equilibrium_stability(upper(0.9), 0.001, 100.0, o);
  unsetenv("ADVFRONT_WORKERS");
  CHECK(a.worst_margin == b.worst_margin);
  CHECK(a.argmin_k == b.argmin_k);
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) CHECK(a.samples[i].margin == b.samples[i].margin);
}
