#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <memory>

#include "advfront/front_solver.hpp"

using namespace advfront;

namespace {

std::shared_ptr<const KlausmeierModel> base_model() {
  return std::make_shared<const KlausmeierModel>(0.1, 0.1, 2.0);
}

const FrontSetup& left_setup() {
  static const FrontSetup s = klausmeier_setup(base_model());
  return s;
}

}  // namespace

TEST_CASE("boundary spectra split two plus two") {
  const FrontSetup& s = left_setup();
  for (const SteadyState* st : {&s.minus, &s.plus}) {
    const BoundarySpectrum b = boundary_spectrum(*st, *s.model, 1e-3, 500.0, -0.8);
    int pos = 0;
    for (double r : b.re) pos += r > 0;
    CHECK(pos == 2);
    CHECK(b.slowest_unstable > 0);
    CHECK(b.slowest_stable < 0);
  }
}

TEST_CASE("front solve converges and approaches the layer speed") {
  const FrontSetup& s = left_setup();
  const SingularSkeleton sk = singular_skeleton(s, 1e-3, 0.0);
  const FrontProfile f = solve_front(s, 1e-3, 0.0);
  CHECK(f.residual < 1e-9);
  CHECK(front_residual(s, f) == doctest::Approx(f.residual).epsilon(1e-6));
  CHECK(f.newton_iterations <= 10);
  const double gap1 = std::abs(f.c - sk.layer.c_star);
  const double gap2 = std::abs(solve_front(s, 2e-3, 0.0).c - singular_skeleton(s, 2e-3, 0.0).layer.c_star);
  MESSAGE("speed gaps " << gap1 << " " << gap2);
  CHECK(gap1 < 1e-2);
  CHECK(gap2 / gap1 > 1.5);
  CHECK(gap2 / gap1 < 2.5);
  CHECK(std::abs(interface_position(f)) < 1e-8);
  CHECK(std::abs(f.u.front() - s.minus.U) < 1e-6);
  CHECK(f.v.back() == doctest::Approx(s.plus.V).epsilon(1e-6));
}

TEST_CASE("front speed is converged in the mesh and the domain") {
  const FrontSetup& s = left_setup();
  FrontOptions o;
  const FrontProfile f = solve_front(s, 1e-3, 1472.0, o);

  FrontOptions fine = o;
  fine.h0 *= 0.5;
  fine.alpha *= 0.5;
  MeshSpec spec = f.mesh.spec();
  spec.h0 = fine.h0;
  spec.alpha = fine.alpha;
  const FrontProfile g = solve_front_bvp(s, remesh(f, spec), fine);
  CHECK(std::abs(g.c - f.c) < 1e-7);

  MeshSpec wide = f.mesh.spec();
  wide.L_minus *= 1.3;
  wide.L_plus *= 1.3;
  const FrontProfile w = solve_front_bvp(s, remesh(f, wide), o);
  CHECK(std::abs(w.c - f.c) < 1e-8);
}

TEST_CASE("translated guesses return to the same anchored front") {
  const FrontSetup& s = left_setup();
  const FrontProfile f = solve_front(s, 1e-3, 500.0);
  for (double shift : {-2.0, 3.5}) {
    const FrontProfile g = solve_front_bvp(s, shifted(f, shift));
    CHECK(std::abs(g.c - f.c) < 1e-9);
    CHECK(std::abs(interface_position(g)) < 1e-8);
  }
}

TEST_CASE("mirrored orientation reverses the speed without advection") {
  const FrontSetup right = klausmeier_setup(base_model(), Orientation::DesertRight);
  const FrontProfile a = solve_front(left_setup(), 1e-3, 0.0);
  const FrontProfile b = solve_front(right, 1e-3, 0.0);
  CHECK(b.c == doctest::Approx(-a.c).epsilon(1e-7));
}

TEST_CASE("profile CSV round trip is bitwise") {
  const FrontProfile f = solve_front(left_setup(), 2e-3, 800.0);
  const auto dir = std::filesystem::temp_directory_path() / "advfront_front_rt";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "front.csv").string();
  save_front(f, path);
  const FrontProfile g = load_front(path);
  REQUIRE(g.size() == f.size());
  CHECK(g.c == f.c);
  CHECK(g.delta == f.delta);
  CHECK(g.nu == f.nu);
  CHECK(g.mu == f.mu);
  bool same = true;
  for (std::size_t j = 0; j < f.size(); ++j) {
    same = same && g.u[j] == f.u[j] && g.v[j] == f.v[j] && g.mesh.xi(j) == f.mesh.xi(j);
  }
  CHECK(same);
  std::filesystem::remove_all(dir);
}

TEST_CASE("continuation in nu lands on checkpoints and matches direct solves") {
  const FrontSetup& s = left_setup();
  const FrontProfile f0 = solve_front(s, 1e-3, 0.0);
  ContinuationOptions co;
  co.checkpoints = {1472.0, 1e4};
  const FrontBranch br = continue_front(s, f0, ContinuationParameter::Nu, 2e4, co);
  REQUIRE(br.completed);
  bool hit1 = false, hit2 = false;
  for (std::size_t i = 1; i < br.points.size(); ++i) {
    hit1 = hit1 || br.points[i].parameter == 1472.0;
    hit2 = hit2 || br.points[i].parameter == 1e4;
    CHECK(br.points[i].profile.c > br.points[i - 1].profile.c);
    CHECK(br.points[i].profile.residual < 1e-9);
  }
  CHECK(hit1);
  CHECK(hit2);
  CHECK(br.points.back().parameter == 2e4);
  const FrontProfile direct = solve_front(s, 1e-3, 2e4);
  CHECK(std::abs(direct.c - br.points.back().profile.c) < 1e-8);
}

TEST_CASE("continuation parameter names round trip") {
  for (auto p : {ContinuationParameter::Nu, ContinuationParameter::Delta, ContinuationParameter::Mu1,
                 ContinuationParameter::Mu2, ContinuationParameter::Mu3}) {
    CHECK(parse_continuation_parameter(to_string(p)) == p);
  }
  CHECK_THROWS_AS(parse_continuation_parameter("gamma"), InputError);
}
