#include <doctest.h>

#include <cmath>
#include <memory>

#include "advfront/spectral.hpp"

using namespace advfront;

namespace {

const FrontSetup& setup() {
  static const FrontSetup s = klausmeier_setup(std::make_shared<const KlausmeierModel>(0.1, 0.1, 2.0));
  return s;
}

MeshSpec scaled(const MeshSpec& s, double k) {
  MeshSpec r = s;
  r.h0 *= k;
  r.alpha *= k;
  return r;
}

}  // namespace

TEST_CASE("adjoint kernel is a left null vector") {
  const FrontProfile f = solve_front(setup(), 1e-3, 1000.0);
  const AdjointSolution a = solve_adjoint(*setup().model, f);
  CHECK(a.residual < 1e-12);
  CHECK(std::abs(a.eigenvalue) < 1e-6);
  CHECK(a.next_eigenvalue > 1e-3);
  CHECK(a.overlap > 1e-10);
  double norm = 0.0;
  const auto w = f.mesh.weights();
  const auto du = f.p();
  const auto dv = f.mesh.derivative(f.v);
  for (std::size_t j = 0; j < f.size(); ++j) norm += w[j] * (du[j] * a.uA[j] + dv[j] * a.vA[j]);
  CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("continuous adjoint residual decreases at high order under refinement") {
  const FrontProfile f = solve_front(setup(), 1e-2, 300.0);
  const FrontProfile g = solve_front_bvp(setup(), remesh(f, scaled(f.mesh.spec(), 0.5)));
  const double r1 = solve_adjoint(*setup().model, f).continuous_residual;
  const double r2 = solve_adjoint(*setup().model, g).continuous_residual;
  MESSAGE("adjoint residuals " << r1 << " " << r2);
  CHECK(r2 < r1);
  CHECK(std::log2(r1 / r2) > 3.0);
}

TEST_CASE("quotient is invariant under rescaling the adjoint") {
  const FrontProfile f = solve_front(setup(), 1e-3, 500.0);
  AdjointSolution a = solve_adjoint(*setup().model, f);
  const double l = lambda_c2_exact(f, a);
  for (auto& x : a.uA) x *= 7.3;
  for (auto& x : a.vA) x *= 7.3;
  CHECK(lambda_c2_exact(f, a) == doctest::Approx(l).epsilon(1e-13));
  CHECK(lambda_c2_discrete(f, a) == doctest::Approx(l).epsilon(1e-6));
}

TEST_CASE("quartic fit remainder shrinks at fourth order") {
  const FrontProfile f = solve_front(setup(), 1e-2, 300.0);
  SpectralOptions o;
  o.window_rtol = 0.0;
  o.ell0 = 4e-3;
  const OracleFit a = lambda_c2_oracle(*setup().model, f, o);
  o.ell0 = 2e-3;
  const OracleFit b = lambda_c2_oracle(*setup().model, f, o);
  const AdjointSolution adj = solve_adjoint(*setup().model, f);
  const double exact = lambda_c2_exact(f, adj);
  // Quadratic-only remainder: (lambda - lambda0)/ell^2 - lambda2 = O(ell^2).
  const double ra = std::abs((a.lambdas[0] - a.lambda0) / (a.ells[0] * a.ells[0]) - exact);
  const double rb = std::abs((b.lambdas[0] - b.lambda0) / (b.ells[0] * b.ells[0]) - exact);
  MESSAGE("quadratic remainders " << ra << " " << rb);
  CHECK(std::log2(ra / rb) == doctest::Approx(2.0).epsilon(0.15));
  CHECK(std::abs(b.lambda2 - exact) < std::abs(a.lambda2 - exact) / 8.0);
  const OracleFit adaptive = lambda_c2_oracle(*setup().model, f);
  CHECK(std::abs(adaptive.lambda2 - exact) < std::abs(exact) * 1e-3);
}

TEST_CASE("oracle and Fredholm quotient agree across regimes") {
  for (double nu : {0.0, 1472.0, 1e5}) {
    const FrontProfile f = solve_front(setup(), 1e-3, nu);
    StabilityOptions o;
    o.asymptotic = false;
    const StabilityReport r = stability_report(setup(), f, o);
    REQUIRE(r.lambda2_oracle.has_value());
    CHECK(r.relative_gap < 1e-2);
    CHECK(std::abs(r.lambda2_discrete - r.lambda2_exact) < 1e-6 * std::abs(r.lambda2_exact));
  }
}

TEST_CASE("quotient is converged in mesh and domain") {
  const FrontProfile f = solve_front(setup(), 1e-3, 2e4);
  const double l = lambda_c2_exact(f, solve_adjoint(*setup().model, f));
  const FrontProfile g = solve_front_bvp(setup(), remesh(f, scaled(f.mesh.spec(), 0.5)));
  const double lg = lambda_c2_exact(g, solve_adjoint(*setup().model, g));
  MeshSpec wide = f.mesh.spec();
  wide.L_minus *= 1.5;
  wide.L_plus *= 1.5;
  const FrontProfile w = solve_front_bvp(setup(), remesh(f, wide));
  const double lw = lambda_c2_exact(w, solve_adjoint(*setup().model, w));
  CHECK(std::abs(lg - l) < 5e-3 * std::abs(l));
  CHECK(std::abs(lw - l) < 5e-3 * std::abs(l));
}

TEST_CASE("quotient follows the singular limit in the weak and strong regimes") {
  for (double nu : {0.0, 1e5}) {
    const FrontProfile f = solve_front(setup(), 1e-3, nu);
    StabilityOptions o;
    o.oracle = false;
    const StabilityReport r = stability_report(setup(), f, o);
    CHECK(std::abs(r.lambda2_exact - r.lambda2_asymptotic) < 0.1 * std::abs(r.lambda2_asymptotic));
  }
}

TEST_CASE("log-log fit recovers a power law") {
  const std::vector<double> x{1e-3, 2e-3, 5e-3, 1e-2};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * std::pow(v, -4.0 / 3.0));
  const auto [slope, icpt] = loglog_fit(x, y);
  CHECK(slope == doctest::Approx(-4.0 / 3.0).epsilon(1e-12));
  CHECK(std::exp(icpt) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK_THROWS_AS(loglog_fit({1.0}, {1.0}), InputError);
}
