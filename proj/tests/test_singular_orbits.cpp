#include <doctest.h>

#include <cmath>
#include <memory>

#include <boost/numeric/odeint.hpp>

#include "advfront/singular_orbits.hpp"

using namespace advfront;

namespace {

std::shared_ptr<KlausmeierModel> base_model() {
  return std::make_shared<KlausmeierModel>(0.1, 0.1, 2.0);
}

// Explicit logistic layer front of the cubic Klausmeier nonlinearity.
struct Logistic {
  double a, b, s, c;
  explicit Logistic(const KlausmeierModel& m, double v)
      : a(m.branch_u(v, -1)), b(m.branch_u(v, +1)), s(std::sqrt(m.mu2() * v / 2)),
        c(s * (2 * a - b)) {}
  double u(double x) const { return b / (1 + std::exp(-s * b * x)); }
  double up(double x) const {
    const double w = u(x);
    return s * w * (b - w);
  }
};

double d1_6th(const std::vector<double>& f, std::size_t j, double h) {
  return (-f[j - 3] + 9 * f[j - 2] - 45 * f[j - 1] + 45 * f[j + 1] - 9 * f[j + 2] + f[j + 3]) /
         (60 * h);
}

}  // namespace

TEST_CASE("regime classification") {
  auto w = classify_regime(0.001, 0.0);
  CHECK(w.tag == Regime::Weak);
  CHECK(w.rbar == 0.0);
  CHECK(std::isinf(w.eps));
  CHECK(std::isinf(w.deltabar));
  auto i = classify_regime(0.001, 1e4);
  CHECK(i.tag == Regime::Intermediate);
  CHECK(i.r == doctest::Approx(0.01));
  CHECK(i.deltabar == doctest::Approx(0.1));
  CHECK(classify_regime(0.001, 1e8).tag == Regime::Strong);
  CHECK(classify_regime(0.001, 1000.0).tag == Regime::Weak);
  CHECK(classify_regime(0.001, 6e4).tag == Regime::Strong);
  CHECK_THROWS_AS(classify_regime(0.0, 1.0), InputError);
}

TEST_CASE("layer shooting reproduces the explicit logistic front") {
  auto m = base_model();
  const FrontSetup setup = klausmeier_setup(m);
  for (double v : {1.0, 1.5, 2.0}) {
    const LayerFront L = solve_layer_front(*m, v, setup.branch_minus, setup.branch_plus);
    const Logistic ex(*m, v);
    CHECK(std::abs(L.c_star - ex.c) < 1e-8);
    double err = 0, derr = 0;
    for (std::size_t j = 0; j < L.xi.size(); ++j) {
      err = std::max(err, std::abs(L.u[j] - ex.u(L.xi[j])));
      derr = std::max(derr, std::abs(L.p[j] - ex.up(L.xi[j])));
    }
    CHECK(err < 1e-6);
    CHECK(derr < 1e-6);
    // Residual of u'' + c u' + F at interior nodes.
    const double h = L.xi[1] - L.xi[0];
    double res = 0;
    for (std::size_t j = 3; j + 3 < L.xi.size(); ++j) {
      res = std::max(res, std::abs(d1_6th(L.p, j, h) + L.c_star * L.p[j] + m->F(L.u[j], v)));
    }
    CHECK(res < 1e-9);
    CHECK(std::abs(L.u.front() - L.u_minus) < 1e-8);
    CHECK(std::abs(L.u.back() - L.u_plus) < 1e-8);
    CHECK(L.value(0.0) == doctest::Approx(0.5 * (L.u_minus + L.u_plus)).epsilon(1e-10));
    CHECK(std::abs(L.value(0.123) - ex.u(0.123)) < 1e-6);
    CHECK(std::abs(L.slope(-0.7) - ex.up(-0.7)) < 1e-6);
  }
}

TEST_CASE("weighted integrals against quadrature of the explicit front") {
  auto m = base_model();
  const FrontSetup setup = klausmeier_setup(m);
  const double v = 1.5;
  const LayerFront L = solve_layer_front(*m, v, setup.branch_minus, setup.branch_plus);
  const auto w = weighted_integrals(L, *m);
  const Logistic ex(*m, v);
  // Composite Simpson over a long window.
  const int n = 400000;
  const double lo = -60.0, hi = 60.0, h = (hi - lo) / n;
  double IF = 0, IN = 0;
  for (int i = 0; i <= n; ++i) {
    const double x = lo + i * h;
    const double c = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
    const double up = ex.up(x), u = ex.u(x);
    IF += c * std::exp(ex.c * x) * u * u * (1 - m->mu2() * u) * up;
    IN += c * std::exp(ex.c * x) * up * up;
  }
  IF *= h / 3;
  IN *= h / 3;
  CHECK(w.F_star == doctest::Approx(IF).epsilon(1e-8));
  CHECK(w.N_star == doctest::Approx(IN).epsilon(1e-8));
  CHECK(w.F_star > 0);
  CHECK(w.N_star > 0);
  CHECK(w.G_star == doctest::Approx(-v * L.u_plus * L.u_plus).epsilon(1e-13));
}

TEST_CASE("balanced cubic gives a standing layer") {
  FunctionModel f(
      "cubic", {}, [](double u, double) { return u * (1 - u) * (u - 0.5); },
      [](double, double v) { return -v; });
  NullclineBranch lo{"lo", {-1, 1, false, false}, [](double) { return 0.0; },
                     [](double) { return 0.0; }};
  NullclineBranch hi{"hi", {-1, 1, false, false}, [](double) { return 1.0; },
                     [](double) { return 0.0; }};
  const LayerFront L = solve_layer_front(f, 0.0, lo, hi, 0.3);
  CHECK(std::abs(L.c_star) < 1e-10);
  // Reverse orientation is the mirror image with the opposite speed.
  FunctionModel g(
      "cubic", {}, [](double u, double) { return u * (1 - u) * (u - 0.3); },
      [](double, double v) { return -v; });
  const LayerFront A = solve_layer_front(g, 0.0, lo, hi);
  const LayerFront B = solve_layer_front(g, 0.0, hi, lo);
  CHECK(A.c_star == doctest::Approx(-B.c_star).epsilon(1e-9));
  CHECK(A.value(0.8) == doctest::Approx(B.value(-0.8)).epsilon(1e-7));
}

TEST_CASE("strong-regime q profile") {
  auto m = base_model();
  const FrontSetup setup = klausmeier_setup(m);
  const double v = setup.plus.V;
  const LayerFront L = solve_layer_front(*m, v, setup.branch_minus, setup.branch_plus);
  const double h = 0.01;
  std::vector<double> xi;
  for (double x = -30; x <= 30; x += h) xi.push_back(x);
  for (double r : {0.5, 2.0}) {
    const auto q = strong_q_profile(L, *m, r, xi);
    double res = 0;
    for (std::size_t j = 3; j + 3 < xi.size(); ++j) {
      res = std::max(res, std::abs(d1_6th(q, j, h) + r * (q[j] + m->G(L.value(xi[j]), v))));
    }
    CHECK(res < 1e-8);
  }
  double prev = 1e300;
  for (double r : {10.0, 100.0, 1000.0}) {
    const auto q = strong_q_profile(L, *m, r, xi);
    double err = 0;
    for (std::size_t j = 0; j < xi.size(); ++j) {
      err = std::max(err, std::abs(q[j] + m->G(L.value(xi[j]), v)));
    }
    CHECK(err < prev / 5);
    prev = err;
  }
}

namespace {
// Independent re-integration of the planar reduced flow between consecutive samples.
void check_piece(const FrontSetup& setup, const SlowOrbits& S, bool minus) {
  using namespace boost::numeric::odeint;
  const auto& br = minus ? setup.branch_minus : setup.branch_plus;
  const auto& s = minus ? S.s_minus : S.s_plus;
  const auto& vv = minus ? S.v_minus : S.v_plus;
  const auto& qq = minus ? S.q_minus : S.q_plus;
  auto sys = [&](const std::array<double, 2>& x, std::array<double, 2>& dx, double) {
    dx[0] = S.a * x[1];
    dx[1] = -S.b * x[1] - setup.model->G(br.f(x[0]), x[0]);
  };
  auto stepper = make_dense_output(1e-13, 1e-13, runge_kutta_dopri5<std::array<double, 2>>());
  const std::size_t n = s.size();
  const std::size_t stride = std::max<std::size_t>(1, n / 40);
  for (std::size_t k = 0; k + 1 < n; k += stride) {
    std::array<double, 2> x{vv[k], qq[k]};
    integrate_adaptive(stepper, sys, x, s[k], s[k + 1], 1e-3 * (s[k + 1] - s[k]));
    CHECK(std::abs(x[0] - vv[k + 1]) < 1e-8 * (1 + std::abs(vv[k + 1])));
    CHECK(std::abs(x[1] - qq[k + 1]) < 1e-8 * (1 + std::abs(qq[k + 1])));
  }
}
}  // namespace

TEST_CASE("weak-regime slow orbits and leading-order lambda") {
  auto m = base_model();
  const FrontSetup setup = klausmeier_setup(m);
  const auto reg = classify_regime(0.001, 0.0);
  const SlowOrbits S = reduced_slow_orbits(setup, reg);
  CHECK(S.v_minus.back() == S.v_star);
  CHECK(S.v_plus.front() == S.v_star);
  CHECK(S.q_minus.back() == S.q_plus.front());
  CHECK(S.transversality > 1e-6);
  CHECK(S.v_star > setup.plus.V);
  CHECK(S.v_star < setup.minus.V);
  check_piece(setup, S, true);
  check_piece(setup, S, false);

  const auto sk = singular_skeleton(setup, 0.001, 0.0);
  CHECK(sk.report.F_star > 0);
  CHECK(sk.report.G_star < 0);
  CHECK(sk.report.lambda2 > 0);
  CHECK(sk.report.criterion_sign == -(sk.report.F_star > 0 ? 1 : -1) * (sk.report.G_star > 0 ? 1 : -1));

  // S(rbar) is continuous at rbar = 0.
  const auto near = singular_skeleton(setup, 0.001, 1e-3);
  CHECK(near.report.S == doctest::Approx(sk.report.S).epsilon(1e-5));
  // delta * lambda is independent of delta at fixed rbar.
  const auto a = singular_skeleton(setup, 0.001, 500.0);
  const auto b = singular_skeleton(setup, 0.0005, 1000.0);
  CHECK(a.regime.rbar == doctest::Approx(b.regime.rbar));
  CHECK(0.001 * a.report.lambda2 == doctest::Approx(0.0005 * b.report.lambda2).epsilon(1e-10));
  // Smooth dependence on rbar.
  const auto c = reduced_slow_orbits(setup, classify_regime(0.001, 505.0));
  CHECK(std::abs(c.v_star - a.slow.v_star) < 0.05 * std::abs(a.slow.v_star));
  CHECK(std::abs(c.q_star - a.slow.q_star) < 0.05 * std::abs(a.slow.q_star));
}

TEST_CASE("intermediate-regime skeleton") {
  auto m = base_model();
  const FrontSetup setup = klausmeier_setup(m);
  const double Vp = setup.plus.V;
  double prev_gap = 1e300, prev_ratio = 0, prev_step = 1e300;
  for (double db : {0.2, 0.1, 0.05, 0.02}) {
    // deltabar = 1/(delta nu) at delta = 1e-4.
    const double delta = 1e-4, nu = 1.0 / (db * delta);
    const auto reg = classify_regime(delta, nu);
    REQUIRE(reg.tag == Regime::Intermediate);
    const SlowOrbits S = reduced_slow_orbits(setup, reg);
    // The jump point approaches V+ at a rate of order deltabar^2.
    const double gap = S.v_star - Vp;
    const double ratio = gap / (db * db);
    CHECK(gap > 0);
    CHECK(gap < prev_gap);
    CHECK(ratio > 0.1);
    CHECK(ratio < 5.0);
    if (prev_ratio != 0) {
      CHECK(std::abs(ratio - prev_ratio) <= prev_step + 1e-12);
      prev_step = std::abs(ratio - prev_ratio);
    }
    prev_gap = gap;
    prev_ratio = ratio;
    check_piece(setup, S, true);
    check_piece(setup, S, false);
    // The jump happens with q~ close to -G(f-(V+), V+), not at q~ = 0.
    CHECK(S.q_star == doctest::Approx(-m->G(0.0, Vp)).epsilon(0.05));
  }
  const auto sk = singular_skeleton(setup, 0.001, 1e4);
  const int sgn = -(sk.report.F_star > 0 ? 1 : -1) * (sk.report.G_star > 0 ? 1 : -1);
  CHECK((sk.report.M_G2 > 0 ? 1 : -1) == sgn);
  CHECK((sk.report.M_G > 0 ? 1 : -1) == sgn);
  CHECK((sk.report.M_G2_limit > 0 ? 1 : -1) == sgn);
  CHECK(sk.report.M_full_limit == doctest::Approx(2 * sk.report.M_G2_limit));
  CHECK(sk.report.nu_crit_G2 > 0);
  // Below the critical advection the correction dominates; well above it lambda approaches -1.
  CHECK(sk.report.nu_crit_full > 1e4);
  CHECK(sk.report.lambda2 > 0);
  const double delta = 1e-4;
  const auto hi = singular_skeleton(setup, delta, 3.0 * std::pow(std::abs(sk.report.M_full_limit), 1.0 / 3.0) *
                                                     std::pow(delta, -4.0 / 3.0));
  REQUIRE(hi.regime.tag == Regime::Intermediate);
  CHECK(hi.report.lambda2 < 0);
  CHECK(hi.report.lambda2 > -1);
}

TEST_CASE("strong regime") {
  auto m = base_model();
  const FrontSetup setup = klausmeier_setup(m);
  const auto sk = singular_skeleton(setup, 0.001, 1e6);
  CHECK(sk.regime.tag == Regime::Strong);
  CHECK(sk.report.lambda2 == -1.0);
  CHECK(sk.report.error_bound == doctest::Approx(1.0 / (0.001 * 0.001 * 1e12)));
  CHECK(sk.slow.v_star == setup.plus.V);
  CHECK(sk.slow.v_minus.front() == doctest::Approx(setup.minus.V).epsilon(1e-9));
  // Reduced flow v_eta = -G(f-(v), v) along the samples.
  for (std::size_t k = 0; k < sk.slow.v_minus.size(); ++k) {
    CHECK(sk.slow.q_minus[k] == doctest::Approx(-m->G(0.0, sk.slow.v_minus[k])));
  }
  // Exact solution on S-: v - mu3 = (V+ - mu3) e^eta.
  for (double eta : {-0.5, -2.0, -7.0}) {
    CHECK(sk.slow.v_at(eta) ==
          doctest::Approx(2.0 + (setup.plus.V - 2.0) * std::exp(eta)).epsilon(1e-7));
  }
}
