#include <doctest.h>

#include <cmath>

#include "advfront/mesh.hpp"

using namespace advfront;

TEST_CASE("stencils differentiate smooth functions at fourth order") {
  auto err = [](double h0) {
    MeshSpec s{h0, 0.5 * h0, 3.0, 4.0};
    MappedMesh m(s);
    std::vector<double> f(m.size());
    for (std::size_t j = 0; j < m.size(); ++j) f[j] = std::sin(m.xi(j)) + 0.1 * m.xi(j) * m.xi(j);
    const auto d1 = m.derivative(f), d2 = m.second_derivative(f);
    double e1 = 0, e2 = 0;
    for (std::size_t j = 0; j < m.size(); ++j) {
      const double x = m.xi(j);
      e1 = std::max(e1, std::abs(d1[j] - (std::cos(x) + 0.2 * x)));
      e2 = std::max(e2, std::abs(d2[j] - (-std::sin(x) + 0.2)));
    }
    return std::pair{e1, e2};
  };
  const auto a = err(0.05), b = err(0.025);
  CHECK(a.first / b.first > 12.0);
  CHECK(a.second / b.second > 7.0);  // one-sided second derivative rows are third order
  CHECK(b.first < 1e-5);
}

TEST_CASE("polynomials of degree 3 are differentiated exactly in s") {
  MappedMesh m(MeshSpec{0.1, 0.0, 1.0, 1.0});
  std::vector<double> f(m.size());
  for (std::size_t j = 0; j < m.size(); ++j) {
    const double x = m.xi(j);
    f[j] = 1 + 2 * x - x * x + 0.5 * x * x * x;
  }
  const auto d1 = m.derivative(f), d2 = m.second_derivative(f);
  for (std::size_t j = 0; j < m.size(); ++j) {
    const double x = m.xi(j);
    CHECK(d1[j] == doctest::Approx(2 - 2 * x + 1.5 * x * x).epsilon(1e-11));
    CHECK(d2[j] == doctest::Approx(-2 + 3 * x).epsilon(1e-10));
  }
}

TEST_CASE("weights integrate smooth functions accurately") {
  MappedMesh m(MeshSpec{0.02, 0.01, 30.0, 40.0});
  std::vector<double> f(m.size());
  for (std::size_t j = 0; j < m.size(); ++j) f[j] = std::exp(-m.xi(j) * m.xi(j) / 8.0);
  CHECK(m.integrate(f) == doctest::Approx(std::sqrt(8.0 * M_PI)).epsilon(1e-9));
  auto err = [](double h0) {
    MappedMesh mm(MeshSpec{h0, 0.5 * h0, 30.0, 40.0});
    std::vector<double> g(mm.size());
    for (std::size_t j = 0; j < mm.size(); ++j) g[j] = std::cos(0.1 * mm.xi(j));
    return std::abs(mm.integrate(g) -
                    (std::sin(0.1 * mm.L_plus()) + std::sin(0.1 * mm.L_minus())) / 0.1);
  };
  const double e1 = err(0.04), e2 = err(0.02);
  CHECK(e1 / e2 > 12.0);
  CHECK(e2 < 1e-6);
}

TEST_CASE("refinement nests nodes and interpolation is accurate") {
  MappedMesh m(MeshSpec{0.05, 0.02, 20.0, 25.0});
  MappedMesh r = m.refined();
  CHECK(r.size() == 2 * m.size() - 1);
  for (std::size_t j = 0; j < m.size(); ++j) CHECK(r.xi(2 * j) == doctest::Approx(m.xi(j)).epsilon(1e-13));
  std::vector<double> f(m.size());
  for (std::size_t j = 0; j < m.size(); ++j) f[j] = std::tanh(m.xi(j));
  for (double x : {-3.3, -0.01, 0.77, 12.1}) {
    CHECK(std::abs(m.interpolate(f, x) - std::tanh(x)) < 1e-5);
  }
  CHECK(m.interpolate(f, -100.0) == f.front());
  CHECK(m.xi(m.center()) == 0.0);
}
