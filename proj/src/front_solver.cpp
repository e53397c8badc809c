#include "advfront/front_solver.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "advfront/io.hpp"

namespace advfront {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Trip = Eigen::Triplet<double>;
using Vec = Eigen::VectorXd;
using Rows = Eigen::Matrix<double, 2, 4>;

double sgn(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

Eigen::Matrix4d linearization(const Jacobian& j, double delta, double nu, double c) {
  const double d2 = delta * delta;
  Eigen::Matrix4d M;
  M << 0, 1, 0, 0,                          //
      -j.Fu, -c, -j.Fv, 0,                   //
      0, 0, 0, 1,                            //
      -d2 * j.Gu, 0, -d2 * j.Gv, -d2 * (nu + c);
  return M;
}

// Left eigenvectors annihilating the admissible boundary deviations: the stable
// ones at the left end (deviation in E^u) and the unstable ones at the right end.
// Rows are normalized on a pivot column pair so they vary smoothly with c.
Rows projection_rows(const Eigen::Matrix4d& M, bool left_end, std::array<int, 2>& pivot,
                     bool choose_pivot) {
  Eigen::EigenSolver<Eigen::Matrix4d> es(M.transpose());
  const auto lam = es.eigenvalues();
  const auto vec = es.eigenvectors();
  std::vector<int> pick;
  for (int k = 0; k < 4; ++k) {
    if (std::abs(lam[k].real()) < 1e-8) {
      std::ostringstream os;
      os << "loss of hyperbolicity at the " << (left_end ? "left" : "right")
         << " rest state: eigenvalue " << lam[k].real() << (lam[k].imag() >= 0 ? "+" : "")
         << lam[k].imag() << "i";
      throw NumericalError(os.str());
    }
    if ((lam[k].real() < 0) == left_end) pick.push_back(k);
  }
  if (pick.size() != 2) throw NumericalError("rest state is not a saddle with two stable directions");
  Rows W;
  if (std::abs(lam[pick[0]].imag()) > 0) {
    W.row(0) = vec.col(pick[0]).real().transpose();
    W.row(1) = vec.col(pick[0]).imag().transpose();
  } else {
    W.row(0) = vec.col(pick[0]).real().transpose();
    W.row(1) = vec.col(pick[1]).real().transpose();
  }
  if (choose_pivot) {
    double best = -1.0;
    for (int a = 0; a < 4; ++a) {
      for (int b = a + 1; b < 4; ++b) {
        const double d = std::abs(W(0, a) * W(1, b) - W(0, b) * W(1, a)) /
                         (W.col(a).norm() * W.col(b).norm() + 1e-300);
        if (d > best) {
          best = d;
          pivot = {a, b};
        }
      }
    }
  }
  Eigen::Matrix2d P;
  P << W(0, pivot[0]), W(0, pivot[1]), W(1, pivot[0]), W(1, pivot[1]);
  return P.inverse() * W;
}

struct System {
  const FrontSetup& setup;
  const MappedMesh& mesh;
  double delta, nu;
  std::vector<double> ref_u, ref_du, ref_w;  // phase reference
  double ref_norm = 1.0;
  std::array<int, 2> pivL{0, 2}, pivR{0, 2};
  std::size_t n;

  System(const FrontSetup& s, const MappedMesh& m, double d, double nu_,
         const std::vector<double>& ref)
      : setup(s), mesh(m), delta(d), nu(nu_), ref_u(ref), n(m.size()) {
    ref_du = mesh.derivative(ref_u);
    ref_w.resize(n);
    double nrm = 0.0;
    for (std::size_t j = 0; j < n; ++j) nrm += mesh.weights()[j] * ref_du[j] * ref_du[j];
    ref_norm = std::sqrt(nrm);
    for (std::size_t j = 0; j < n; ++j) ref_w[j] = mesh.weights()[j] * ref_du[j] / ref_norm;
  }

  double apply(const StencilRow& r, const Vec& x, int comp) const {
    double s = 0.0;
    for (int k = 0; k < r.count; ++k) s += r.w[k] * x[2 * (r.first + k) + comp];
    return s;
  }

  Rows rows(bool left, double c, bool choose) {
    const SteadyState& st = left ? setup.minus : setup.plus;
    const Jacobian j = setup.model->partials(st.U, st.V);
    return projection_rows(linearization(j, delta, nu, c), left, left ? pivL : pivR, choose);
  }

  Eigen::Vector4d deviation(const Vec& x, bool left) const {
    const std::size_t j = left ? 0 : n - 1;
    const SteadyState& st = left ? setup.minus : setup.plus;
    const StencilRow d = mesh.d1(j);
    return {x[2 * j] - st.U, apply(d, x, 0), x[2 * j + 1] - st.V, apply(d, x, 1)};
  }

  Vec residual(const Vec& x, bool choose_pivots) {
    const double c = x[2 * n];
    const double d2 = delta * delta;
    Vec R(2 * n + 1);
    const Rows WL = rows(true, c, choose_pivots), WR = rows(false, c, choose_pivots);
    R.segment<2>(0) = WL * deviation(x, true);
    R.segment<2>(2 * (n - 1)) = WR * deviation(x, false);
    for (std::size_t j = 1; j + 1 < n; ++j) {
      const StencilRow a = mesh.d1(j), b = mesh.d2(j);
      const double u = x[2 * j], v = x[2 * j + 1];
      R[2 * j] = apply(b, x, 0) + c * apply(a, x, 0) + setup.model->F(u, v);
      R[2 * j + 1] = apply(b, x, 1) + d2 * (nu + c) * apply(a, x, 1) + d2 * setup.model->G(u, v);
    }
    double ph = 0.0;
    for (std::size_t j = 0; j < n; ++j) ph += ref_w[j] * (x[2 * j] - ref_u[j]);
    R[2 * n] = ph;
    return R;
  }

  double interior_max(const Vec& R) const {
    double m = 0.0;
    for (std::size_t k = 2; k < 2 * (n - 1); ++k) m = std::max(m, std::abs(R[k]));
    return m;
  }

  SpMat jacobian(const Vec& x) {
    const double c = x[2 * n];
    const double d2 = delta * delta;
    const std::size_t N = 2 * n + 1;
    std::vector<Trip> t;
    t.reserve(24 * n);
    auto bc = [&](bool left) {
      const Rows W = rows(left, c, false);
      const std::size_t j = left ? 0 : n - 1;
      const std::size_t r0 = 2 * j;
      const StencilRow d = mesh.d1(j);
      for (int i = 0; i < 2; ++i) {
        t.emplace_back(r0 + i, 2 * j, W(i, 0));
        t.emplace_back(r0 + i, 2 * j + 1, W(i, 2));
        for (int k = 0; k < d.count; ++k) {
          t.emplace_back(r0 + i, 2 * (d.first + k), W(i, 1) * d.w[k]);
          t.emplace_back(r0 + i, 2 * (d.first + k) + 1, W(i, 3) * d.w[k]);
        }
      }
      // d/dc of the projection rows by central differences.
      const double h = 1e-6 * std::max(1.0, std::abs(c));
      const Rows Wp = rows(left, c + h, false), Wm = rows(left, c - h, false);
      const Eigen::Vector2d dc = (Wp - Wm) / (2 * h) * deviation(x, left);
      t.emplace_back(r0, 2 * n, dc[0]);
      t.emplace_back(r0 + 1, 2 * n, dc[1]);
    };
    bc(true);
    bc(false);
    for (std::size_t j = 1; j + 1 < n; ++j) {
      const StencilRow a = mesh.d1(j), b = mesh.d2(j);
      const Jacobian J = setup.model->partials(x[2 * j], x[2 * j + 1]);
      std::array<double, 12> cu{}, cv{};
      const std::size_t lo = std::min(a.first, b.first);
      for (int k = 0; k < b.count; ++k) {
        cu[b.first + k - lo] += b.w[k];
        cv[b.first + k - lo] += b.w[k];
      }
      for (int k = 0; k < a.count; ++k) {
        cu[a.first + k - lo] += c * a.w[k];
        cv[a.first + k - lo] += d2 * (nu + c) * a.w[k];
      }
      const std::size_t hi = std::max(a.first + a.count, b.first + b.count);
      for (std::size_t m = lo; m < hi; ++m) {
        double wu = cu[m - lo], wv = cv[m - lo];
        if (m == j) {
          wu += J.Fu;
          wv += d2 * J.Gv;
          t.emplace_back(2 * j, 2 * j + 1, J.Fv);
          t.emplace_back(2 * j + 1, 2 * j, d2 * J.Gu);
        }
        if (wu != 0.0) t.emplace_back(2 * j, 2 * m, wu);
        if (wv != 0.0) t.emplace_back(2 * j + 1, 2 * m + 1, wv);
      }
      t.emplace_back(2 * j, 2 * n, apply(a, x, 0));
      t.emplace_back(2 * j + 1, 2 * n, d2 * apply(a, x, 1));
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (ref_w[j] != 0.0) t.emplace_back(2 * n, 2 * j, ref_w[j]);
    }
    SpMat J(N, N);
    J.setFromTriplets(t.begin(), t.end());
    return J;
  }
};

Vec pack(const FrontProfile& f) {
  const std::size_t n = f.size();
  Vec x(2 * n + 1);
  for (std::size_t j = 0; j < n; ++j) {
    x[2 * j] = f.u[j];
    x[2 * j + 1] = f.v[j];
  }
  x[2 * n] = f.c;
  return x;
}

void unpack(const Vec& x, FrontProfile& f) {
  const std::size_t n = f.size();
  for (std::size_t j = 0; j < n; ++j) {
    f.u[j] = x[2 * j];
    f.v[j] = x[2 * j + 1];
  }
  f.c = x[2 * n];
}

void check_monotone(const FrontProfile& f) {
  const double D = f.U_plus - f.U_minus;
  const double s = sgn(D);
  const double a = f.U_minus + 0.1 * D, b = f.U_minus + 0.9 * D, mid = f.U_minus + 0.5 * D;
  std::vector<std::size_t> cross;
  for (std::size_t j = 0; j + 1 < f.size(); ++j) {
    if ((f.u[j] - mid) * (f.u[j + 1] - mid) < 0 || (f.u[j] == mid && j > 0)) cross.push_back(j);
  }
  if (cross.size() != 1) {
    throw NumericalError("front profile crosses the interface level " +
                         std::to_string(cross.size()) + " times (expected a single interface)");
  }
  std::size_t lo = cross[0], hi = cross[0] + 1;
  while (lo > 0 && s * (f.u[lo] - a) > 0) --lo;
  while (hi + 1 < f.size() && s * (b - f.u[hi]) > 0) ++hi;
  for (std::size_t j = lo; j < hi; ++j) {
    if (!(s * (f.u[j + 1] - f.u[j]) > 0)) {
      throw NumericalError("converged profile is not monotone across the interface");
    }
  }
}

double param_value(const FrontProfile& f, ContinuationParameter p) {
  switch (p) {
    case ContinuationParameter::Nu:
      return f.nu;
    case ContinuationParameter::Delta:
      return f.delta;
    case ContinuationParameter::Mu1:
      return f.mu.at(0);
    case ContinuationParameter::Mu2:
      return f.mu.at(1);
    case ContinuationParameter::Mu3:
      return f.mu.at(2);
  }
  return 0.0;
}

}  // namespace

std::vector<double> FrontProfile::q() const {
  std::vector<double> d = mesh.derivative(v);
  for (double& x : d) x /= delta;
  return d;
}

BoundarySpectrum boundary_spectrum(const SteadyState& state, const ReactionModel& model,
                                   double delta, double nu, double c) {
  const Eigen::Matrix4d M = linearization(model.partials(state.U, state.V), delta, nu, c);
  Eigen::EigenSolver<Eigen::Matrix4d> es(M, false);
  BoundarySpectrum b;
  b.slowest_unstable = std::numeric_limits<double>::infinity();
  b.slowest_stable = -std::numeric_limits<double>::infinity();
  int ns = 0;
  for (int k = 0; k < 4; ++k) {
    b.re[k] = es.eigenvalues()[k].real();
    b.im[k] = es.eigenvalues()[k].imag();
    if (std::abs(b.re[k]) < 1e-8) throw NumericalError("loss of hyperbolicity at a rest state");
    if (b.re[k] > 0) {
      b.slowest_unstable = std::min(b.slowest_unstable, b.re[k]);
    } else {
      ++ns;
      b.slowest_stable = std::max(b.slowest_stable, b.re[k]);
    }
  }
  if (ns != 2) throw NumericalError("rest state is not a saddle with two stable directions");
  return b;
}

MeshSpec front_mesh_spec(const FrontSetup& setup, double delta, double nu, double c,
                         const FrontOptions& opt) {
  const auto left = boundary_spectrum(setup.minus, *setup.model, delta, nu, c);
  const auto right = boundary_spectrum(setup.plus, *setup.model, delta, nu, c);
  MeshSpec s;
  s.h0 = opt.h0;
  s.alpha = opt.alpha;
  // Slowest rate of either sign: the adjoint decays at the complementary rates.
  s.L_minus = std::max(opt.L_min, opt.decay_lengths / std::min(left.slowest_unstable, -left.slowest_stable));
  s.L_plus = std::max(opt.L_min, opt.decay_lengths / std::min(right.slowest_unstable, -right.slowest_stable));
  return s;
}

FrontProfile build_initial_guess(const FrontSetup& setup, const SingularSkeleton& sk,
                                 const FrontOptions& opt) {
  if (sk.slow.regime != sk.regime.tag || sk.report.regime.tag != sk.regime.tag) {
    throw InputError("initial guess: skeleton pieces belong to different regimes");
  }
  const double delta = sk.regime.delta, nu = sk.regime.nu;
  const LayerFront& L = sk.layer;
  FrontProfile f;
  f.c = L.c_star;
  f.delta = delta;
  f.nu = nu;
  f.model_name = setup.model->name();
  f.mu = setup.model->params();
  f.U_minus = setup.minus.U;
  f.V_minus = setup.minus.V;
  f.U_plus = setup.plus.U;
  f.V_plus = setup.plus.V;
  f.mesh = MappedMesh(front_mesh_spec(setup, delta, nu, f.c, opt));
  const std::size_t n = f.mesh.size();
  f.u.resize(n);
  f.v.resize(n);
  double scale = 1.0;
  switch (sk.regime.tag) {
    case Regime::Weak:
      scale = delta;
      break;
    case Regime::Intermediate:
      scale = sk.regime.r;
      break;
    case Regime::Strong:
      scale = sk.regime.eps;
      break;
  }
  auto branch_at = [](const NullclineBranch& b, double v) {
    return b.f(std::clamp(v, b.domain.lo, b.domain.hi));
  };
  const double Du = L.u_plus - L.u_minus;
  for (std::size_t j = 0; j < n; ++j) {
    const double x = f.mesh.xi(j);
    const double v = sk.slow.v_at(scale * x);
    const double us = L.value(x);
    const double th = std::clamp((us - L.u_minus) / Du, 0.0, 1.0);
    f.v[j] = v;
    f.u[j] = us + (1 - th) * (branch_at(setup.branch_minus, v) - L.u_minus) +
             th * (branch_at(setup.branch_plus, v) - L.u_plus);
  }
  return f;
}

double interface_position(const FrontProfile& f) {
  const double mid = 0.5 * (f.U_minus + f.U_plus);
  const std::size_t c0 = f.mesh.center();
  std::size_t best = f.size();
  for (std::size_t j = 0; j + 1 < f.size(); ++j) {
    if ((f.u[j] - mid) * (f.u[j + 1] - mid) <= 0 && f.u[j] != f.u[j + 1]) {
      const auto dist = [&](std::size_t k) { return k > c0 ? k - c0 : c0 - k; };
      if (best == f.size() || dist(j) < dist(best)) best = j;
    }
  }
  if (best == f.size()) throw NumericalError("front profile does not cross the interface level");
  const double a = f.mesh.xi(best), b = f.mesh.xi(best + 1);
  auto g = [&](double x) { return f.mesh.interpolate(f.u, x) - mid; };
  const double ga = g(a), gb = g(b);
  if (ga == 0) return a;
  if (gb == 0) return b;
  if (ga * gb > 0) return a + (b - a) * (f.u[best] - mid) / (f.u[best] - f.u[best + 1]);
  boost::uintmax_t it = 100;
  const auto r = boost::math::tools::toms748_solve(
      g, a, b, ga, gb, [](double x, double y) { return std::abs(x - y) < 1e-14; }, it);
  return 0.5 * (r.first + r.second);
}

FrontProfile remesh(const FrontProfile& f, const MeshSpec& spec) {
  FrontProfile g = f;
  g.mesh = MappedMesh(spec);
  const std::size_t n = g.mesh.size();
  g.u.resize(n);
  g.v.resize(n);
  const double lo = f.mesh.xi(0), hi = f.mesh.xi(f.size() - 1);
  for (std::size_t j = 0; j < n; ++j) {
    const double x = g.mesh.xi(j);
    if (x < lo) {
      const double w = std::exp(-(lo - x) / std::max(1.0, 0.1 * f.mesh.L_minus()));
      g.u[j] = f.U_minus + (f.u.front() - f.U_minus) * w;
      g.v[j] = f.V_minus + (f.v.front() - f.V_minus) * w;
    } else if (x > hi) {
      const double w = std::exp(-(x - hi) / std::max(1.0, 0.1 * f.mesh.L_plus()));
      g.u[j] = f.U_plus + (f.u.back() - f.U_plus) * w;
      g.v[j] = f.V_plus + (f.v.back() - f.V_plus) * w;
    } else {
      g.u[j] = f.mesh.interpolate(f.u, x);
      g.v[j] = f.mesh.interpolate(f.v, x);
    }
  }
  return g;
}

FrontProfile shifted(const FrontProfile& f, double shift) {
  FrontProfile g = f;
  const std::size_t n = f.size();
  const double lo = f.mesh.xi(0), hi = f.mesh.xi(n - 1);
  for (std::size_t j = 0; j < n; ++j) {
    const double x = std::clamp(f.mesh.xi(j) + shift, lo, hi);
    g.u[j] = f.mesh.interpolate(f.u, x);
    g.v[j] = f.mesh.interpolate(f.v, x);
  }
  return g;
}

double front_residual(const FrontSetup& setup, const FrontProfile& f) {
  System sys(setup, f.mesh, f.delta, f.nu, f.u);
  return sys.interior_max(sys.residual(pack(f), true));
}

namespace {

FrontProfile newton(const FrontSetup& setup, const FrontProfile& guess, const FrontOptions& opt) {
  if (guess.size() < 8) throw InputError("front guess has too few nodes");
  if (!(guess.delta > 0)) throw InputError("front solver requires delta > 0");
  if (!(guess.nu >= 0)) throw InputError("front solver requires nu >= 0");
  System sys(setup, guess.mesh, guess.delta, guess.nu, guess.u);
  Vec x = pack(guess);
  Vec R = sys.residual(x, true);
  double rn = R.norm();
  FrontProfile out = guess;
  for (int it = 1; it <= opt.max_newton; ++it) {
    const SpMat J = sys.jacobian(x);
    Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(J);
    if (lu.info() != Eigen::Success) throw NumericalError("front Newton: singular Jacobian");
    const Vec dx = lu.solve(-R);
    if (!dx.allFinite()) throw NumericalError("front Newton: non-finite update");
    double lam = 1.0;
    Vec xn, Rn;
    double rnn = 0.0;
    for (int ls = 0; ls < 12; ++ls) {
      xn = x + lam * dx;
      try {
        Rn = sys.residual(xn, false);
        rnn = Rn.allFinite() ? Rn.norm() : std::numeric_limits<double>::infinity();
      } catch (const NumericalError&) {
        rnn = std::numeric_limits<double>::infinity();
      }
      if (rnn <= (1 - 1e-4 * lam) * rn || rnn < 1e-3 * opt.tolerance) break;
      lam *= 0.5;
    }
    if (!std::isfinite(rnn)) throw NumericalError("front Newton: residual became non-finite");
    x = xn;
    R = Rn;
    rn = rnn;
    const double step = (lam * dx).lpNorm<Eigen::Infinity>();
    const double res = sys.interior_max(R);
    const double bres = std::max(R.segment<2>(0).lpNorm<Eigen::Infinity>(),
                                 R.segment<2>(2 * (guess.size() - 1)).lpNorm<Eigen::Infinity>());
    if (res < opt.tolerance && bres < opt.tolerance && step < 1e-6 * (1 + x.lpNorm<Eigen::Infinity>())) {
      unpack(x, out);
      out.residual = res;
      out.newton_iterations = it;
      return out;
    }
  }
  std::ostringstream os;
  os << "front Newton did not converge in " << opt.max_newton << " iterations (residual "
     << sys.interior_max(R) << ")";
  throw NumericalError(os.str());
}

FrontProfile solve_on_mesh(const FrontSetup& setup, const FrontProfile& guess,
                           const FrontOptions& opt) {
  FrontProfile f = newton(setup, guess, opt);
  int total = f.newton_iterations;
  const double tol = 1e-8 * std::max(1.0, f.mesh.spec().h0);
  for (int round = 0; round < opt.recenter_rounds; ++round) {
    const double x0 = interface_position(f);
    if (std::abs(x0) <= tol) break;
    f = newton(setup, shifted(f, x0), opt);
    total += f.newton_iterations;
  }
  f.newton_iterations = total;
  check_monotone(f);
  return f;
}

}  // namespace

FrontProfile solve_front_bvp(const FrontSetup& setup, const FrontProfile& guess,
                             const FrontOptions& opt) {
  FrontProfile f = solve_on_mesh(setup, guess, opt);
  if (opt.refine_tolerance > 0) {
    for (int k = 0; k < opt.max_refinements; ++k) {
      const MappedMesh fine = f.mesh.refined();
      FrontProfile g = solve_on_mesh(setup, remesh(f, fine.spec()), opt);
      const double dc = std::abs(g.c - f.c);
      f = std::move(g);
      if (dc < opt.refine_tolerance) break;
    }
  }
  return f;
}

FrontProfile solve_front(const FrontSetup& setup, double delta, double nu,
                         const FrontOptions& opt) {
  const SingularSkeleton sk = singular_skeleton(setup, delta, nu);
  return solve_front_bvp(setup, build_initial_guess(setup, sk, opt), opt);
}

ContinuationParameter parse_continuation_parameter(const std::string& s) {
  if (s == "nu") return ContinuationParameter::Nu;
  if (s == "delta") return ContinuationParameter::Delta;
  if (s == "mu1") return ContinuationParameter::Mu1;
  if (s == "mu2") return ContinuationParameter::Mu2;
  if (s == "mu3") return ContinuationParameter::Mu3;
  throw InputError("unknown continuation parameter '" + s + "' (nu, delta, mu1, mu2, mu3)");
}

std::string to_string(ContinuationParameter p) {
  switch (p) {
    case ContinuationParameter::Nu:
      return "nu";
    case ContinuationParameter::Delta:
      return "delta";
    case ContinuationParameter::Mu1:
      return "mu1";
    case ContinuationParameter::Mu2:
      return "mu2";
    case ContinuationParameter::Mu3:
      return "mu3";
  }
  return "unknown";
}

FrontSetup setup_for(const FrontSetup& base, const std::vector<double>& mu) {
  if (base.model->name() != "klausmeier" || mu.size() != 3) {
    throw InputError("parameter continuation in mu is available for the Klausmeier model only");
  }
  auto m = std::make_shared<const KlausmeierModel>(mu[0], mu[1], mu[2]);
  const bool desert_left = base.minus.U == 0.0;
  return klausmeier_setup(m, desert_left ? Orientation::DesertLeft : Orientation::DesertRight);
}

FrontBranch continue_front(const FrontSetup& setup, const FrontProfile& start,
                           ContinuationParameter parameter, double target,
                           const ContinuationOptions& copt, const FrontOptions& opt) {
  FrontBranch br;
  br.parameter = parameter;
  const double p0 = param_value(start, parameter);
  if (!std::isfinite(target) || target == p0) throw InputError("continuation target equals the start value");
  const double dir = sgn(target - p0);
  const double span = std::abs(target - p0);
  double h = copt.initial_step > 0 ? copt.initial_step : 0.05 * span;
  const double h_max = copt.max_step > 0 ? copt.max_step : span;
  const double h_min = copt.min_step_fraction * std::max({std::abs(p0), std::abs(target), 1e-300});
  std::vector<double> stops = copt.checkpoints;
  stops.push_back(target);
  std::sort(stops.begin(), stops.end());
  if (dir < 0) std::reverse(stops.begin(), stops.end());

  auto configured = [&](double p) {
    FrontSetup s = setup;
    double delta = start.delta, nu = start.nu;
    std::vector<double> mu = start.mu;
    switch (parameter) {
      case ContinuationParameter::Nu:
        nu = p;
        break;
      case ContinuationParameter::Delta:
        delta = p;
        break;
      default:
        mu.at(static_cast<int>(parameter) - 2) = p;
        s = setup_for(setup, mu);
        break;
    }
    return std::tuple{s, delta, nu, mu};
  };

  br.points.push_back({p0, start, 0.0});
  double p = p0;
  while (dir * (target - p) > 0) {
    double next = p + dir * std::min(h, h_max);
    for (double s : stops) {
      if (dir * (s - p) > 0) {
        if (dir * (next - s) > 0) next = s;
        break;
      }
    }
    auto [s, delta, nu, mu] = configured(next);
    const BranchPoint& last = br.points.back();
    FrontProfile pred = last.profile;
    pred.delta = delta;
    pred.nu = nu;
    pred.mu = mu;
    pred.U_minus = s.minus.U;
    pred.V_minus = s.minus.V;
    pred.U_plus = s.plus.U;
    pred.V_plus = s.plus.V;
    FrontProfile guess;
    try {
      const MeshSpec spec = front_mesh_spec(s, delta, nu, pred.c, opt);
      guess = remesh(pred, spec);
      if (br.points.size() >= 2) {
        const BranchPoint& prev = br.points[br.points.size() - 2];
        const FrontProfile old = remesh(prev.profile, spec);
        const double w = (next - last.parameter) / (last.parameter - prev.parameter);
        for (std::size_t j = 0; j < guess.size(); ++j) {
          guess.u[j] += w * (guess.u[j] - old.u[j]);
          guess.v[j] += w * (guess.v[j] - old.v[j]);
        }
        guess.c += w * (last.profile.c - prev.profile.c);
      }
      FrontProfile sol = solve_front_bvp(s, guess, opt);
      br.points.push_back({next, std::move(sol), std::abs(next - p)});
      const int iters = br.points.back().profile.newton_iterations;
      if (iters <= copt.fast_newton) h = std::min(h * copt.grow, h_max);
      p = next;
    } catch (const NumericalError& e) {
      h *= 0.5;
      if (h < h_min) {
        br.completed = false;
        br.termination = std::string("step underflow at ") + to_string(parameter) + " = " +
                         format_double(p) + ": " + e.what();
        return br;
      }
    }
  }
  br.completed = true;
  br.termination = "target reached";
  return br;
}

void save_front(const FrontProfile& f, const std::string& path, const Json& extra) {
  Json h;
  h["kind"] = "front_profile";
  h["model"] = f.model_name;
  h["delta"] = format_double(f.delta);
  h["nu"] = format_double(f.nu);
  h["c"] = format_double(f.c);
  h["U_minus"] = format_double(f.U_minus);
  h["V_minus"] = format_double(f.V_minus);
  h["U_plus"] = format_double(f.U_plus);
  h["V_plus"] = format_double(f.V_plus);
  h["mesh"] = {{"h0", format_double(f.mesh.spec().h0)},
               {"alpha", format_double(f.mesh.spec().alpha)},
               {"L_minus", format_double(f.mesh.spec().L_minus)},
               {"L_plus", format_double(f.mesh.spec().L_plus)},
               {"nodes", f.size()},
               {"extent_minus", format_double(f.mesh.L_minus())},
               {"extent_plus", format_double(f.mesh.L_plus())}};
  h["residual"] = format_double(f.residual);
  h["newton_iterations"] = f.newton_iterations;
  std::vector<std::string> mu_s;
  for (double m : f.mu) mu_s.push_back(format_double(m));
  h["mu"] = mu_s;
  if (extra.is_object()) {
    for (const auto& [k, v] : extra.items()) h[k] = v;
  }
  const auto p = f.p();
  const auto q = f.q();
  std::vector<std::vector<double>> rows(f.size());
  for (std::size_t j = 0; j < f.size(); ++j) rows[j] = {f.mesh.xi(j), f.u[j], p[j], f.v[j], q[j]};
  write_csv(path, h, {"xi", "u", "p", "v", "q"}, rows);
}

FrontProfile load_front(const std::string& path) {
  const CsvTable t = read_csv(path);
  try {
    const Json& h = t.header;
    if (h.at("kind") != "front_profile") throw InputError(path + ": not a front profile");
    auto num = [&](const Json& j) { return parse_double(j.get<std::string>()); };
    FrontProfile f;
    f.model_name = h.at("model").get<std::string>();
    for (const auto& m : h.at("mu")) f.mu.push_back(num(m));
    f.delta = num(h.at("delta"));
    f.nu = num(h.at("nu"));
    f.c = num(h.at("c"));
    f.U_minus = num(h.at("U_minus"));
    f.V_minus = num(h.at("V_minus"));
    f.U_plus = num(h.at("U_plus"));
    f.V_plus = num(h.at("V_plus"));
    f.residual = num(h.at("residual"));
    f.newton_iterations = h.at("newton_iterations").get<int>();
    const Json& m = h.at("mesh");
    MeshSpec s{num(m.at("h0")), num(m.at("alpha")), num(m.at("L_minus")), num(m.at("L_plus"))};
    f.mesh = MappedMesh(s);
    if (t.columns != std::vector<std::string>{"xi", "u", "p", "v", "q"}) {
      throw InputError(path + ": unexpected columns");
    }
    if (t.rows.size() != f.mesh.size()) throw InputError(path + ": node count does not match the mesh");
    f.u.resize(t.rows.size());
    f.v.resize(t.rows.size());
    for (std::size_t j = 0; j < t.rows.size(); ++j) {
      if (t.rows[j][0] != f.mesh.xi(j)) throw InputError(path + ": grid does not match the mesh spec");
      f.u[j] = t.rows[j][1];
      f.v[j] = t.rows[j][3];
    }
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path + ": bad front header: " + e.what());
  }
}

}  // namespace advfront
