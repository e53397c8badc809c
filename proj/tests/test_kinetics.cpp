#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "advfront/kinetics.hpp"

using namespace advfront;

TEST_CASE("klausmeier evaluations") {
  KlausmeierModel m(0.1, 0.1, 2.0);
  auto a = eval_reaction(m, 0.0, 2.0);
  CHECK(a.F == 0.0);
  CHECK(a.G == 0.0);
  auto b = eval_reaction(m, 1.0, 1.0);
  CHECK(b.F == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(std::abs(b.G) < 1e-15);
  for (double v : {0.0, 0.3, 7.0}) CHECK(m.F(0.0, v) == 0.0);
  CHECK_THROWS_AS(eval_reaction(m, std::numeric_limits<double>::quiet_NaN(), 1.0), InputError);
  CHECK_THROWS_AS(eval_reaction(m, 1.0, std::numeric_limits<double>::infinity()), InputError);
}

TEST_CASE("analytic partials match centered differences") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(0.0, 8.0), V(0.0, 3.0);
  KlausmeierModel m(0.1, 0.1, 2.0);
  for (int i = 0; i < 500; ++i) {
    const double u = U(rng), v = V(rng);
    const Jacobian a = m.partials(u, v);
    const Jacobian f = m.finite_difference_partials(u, v);
    CHECK(std::abs(a.Fu - f.Fu) <= 1e-6 * std::max(1.0, std::abs(a.Fu)));
    CHECK(std::abs(a.Fv - f.Fv) <= 1e-6 * std::max(1.0, std::abs(a.Fv)));
    CHECK(std::abs(a.Gu - f.Gu) <= 1e-6 * std::max(1.0, std::abs(a.Gu)));
    CHECK(std::abs(a.Gv - f.Gv) <= 1e-6 * std::max(1.0, std::abs(a.Gv)));
    CHECK(a.Fv == doctest::Approx(u * u * (1 - 0.1 * u)).epsilon(1e-14));
  }
}

TEST_CASE("klausmeier nullcline branches") {
  KlausmeierModel m(0.1, 0.1, 2.0);
  CHECK(m.branch_u(m.fold_v(), +1) == doctest::Approx(5.0));
  CHECK(m.branch_u(m.fold_v(), -1) == doctest::Approx(5.0));
  CHECK(m.branch_u(2.0, +1) == doctest::Approx(9.9497).epsilon(1e-5));
  CHECK(m.branch_u(2.0, -1) == doctest::Approx(0.0503).epsilon(1e-3));
  const auto branches = m.nullcline_branches(0.0, 4.0, 0.0, 0.0);
  REQUIRE(branches.size() == 3);
  CHECK(branches[1].domain.lo == doctest::Approx(0.04));
  CHECK(branches[1].domain.lo_is_fold);
  for (const auto& b : branches) {
    for (int i = 1; i < 200; ++i) {
      const double v = b.domain.lo + (b.domain.hi - b.domain.lo) * i / 200.0;
      const double u = b.f(v);
      CHECK(std::abs(m.F(u, v)) < 1e-10);
      const Jacobian j = m.partials(u, v);
      if (std::abs(j.Fu) > 1e-3) {
        CHECK(std::abs(b.fprime(v) + j.Fv / j.Fu) <= 1e-6 * std::max(1.0, std::abs(b.fprime(v))));
      }
    }
  }
}

TEST_CASE("generic nullcline tracing reproduces the Klausmeier branches") {
  FunctionModel g(
      "k", {}, [](double u, double v) { return -0.1 * u + u * u * v * (1 - 0.1 * u); },
      [](double u, double v) { return 2.0 - v - u * u * v; });
  const auto branches = g.nullcline_branches(0.5, 3.0, -0.5, 12.0);
  int matched = 0;
  KlausmeierModel m(0.1, 0.1, 2.0);
  for (const auto& b : branches) {
    const double v = 1.7;
    if (!b.domain.contains(v)) continue;
    const double u = b.f(v);
    CHECK(std::abs(g.F(u, v)) < 1e-10);
    if (std::abs(u) < 1e-8 || std::abs(u - m.branch_u(v, 1)) < 1e-8 ||
        std::abs(u - m.branch_u(v, -1)) < 1e-8) {
      ++matched;
    }
  }
  CHECK(matched == 3);
}

TEST_CASE("klausmeier steady states") {
  KlausmeierModel m(0.1, 0.1, 2.0);
  const auto res = find_steady_states(m);
  REQUIRE(res.states.size() == 3);
  CHECK(res.states[0].U == 0.0);
  CHECK(res.states[0].V == 2.0);
  const auto& s2 = res.states[2];
  CHECK(s2.U == doctest::Approx(6.6163).epsilon(1e-4));
  CHECK(s2.V == doctest::Approx(0.0447).epsilon(1e-3));
  CHECK(s2.branch == "S+");
  for (const auto& s : res.states) {
    CHECK(std::abs(m.F(s.U, s.V)) < 1e-12);
    CHECK(std::abs(m.G(s.U, s.V)) < 1e-12);
    if (s.bistable_admissible) {
      CHECK(s.jac.Fu < 0);
      CHECK(s.jac.Gv < 0);
      CHECK(s.jac.det() > 0);
    }
  }
  CHECK(res.states[0].bistable_admissible);
  CHECK(s2.bistable_admissible);
  CHECK(m.upper_state_pde_stable());
  CHECK(res.states[0].kappa == doctest::Approx(-1.0));

  KlausmeierModel low(0.1, 0.1, 0.2);
  const auto r2 = find_steady_states(low);
  CHECK(r2.states.size() == 1);
  CHECK(r2.note.has_value());
}

TEST_CASE("generic steady-state search agrees with the closed forms") {
  FunctionModel g(
      "k", {}, [](double u, double v) { return -0.1 * u + u * u * v * (1 - 0.1 * u); },
      [](double u, double v) { return 2.0 - v - u * u * v; });
  SteadyStateSearch w;
  w.u_lo = -0.5;
  w.u_hi = 8.0;
  w.v_lo = 0.0;
  w.v_hi = 3.0;
  const auto res = find_steady_states(g, w);
  KlausmeierModel m(0.1, 0.1, 2.0);
  const auto ref = find_steady_states(m);
  REQUIRE(res.states.size() == 3);
  for (const auto& r : ref.states) {
    bool found = false;
    for (const auto& s : res.states) {
      found |= std::hypot(s.U - r.U, s.V - r.V) < 1e-9;
    }
    CHECK(found);
  }
}

TEST_CASE("admissibility of the upper state flips at mu3 = mu1 (4 mu2 + 1/mu2)") {
  const double mu1 = 0.1, mu2 = 0.1;
  const double boundary = mu1 * (4 * mu2 + 1 / mu2);
  auto flag = [&](double mu3) {
    KlausmeierModel m(mu1, mu2, mu3);
    return find_steady_states(m).states.at(2).bistable_admissible;
  };
  double lo = 0.7, hi = 1.5;
  REQUIRE(!flag(lo));
  REQUIRE(flag(hi));
  while (hi - lo > 1e-9) {
    const double mid = 0.5 * (lo + hi);
    (flag(mid) ? hi : lo) = mid;
  }
  CHECK(std::abs(0.5 * (lo + hi) - boundary) < 1e-6);
}
