#include "advfront/spectral.hpp"

#include <Eigen/SparseLU>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "advfront/parallel.hpp"

namespace advfront {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;
using LU = Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>>;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Derivative of the profile at the interior nodes, interleaved.
Vec kernel_guess(const FrontProfile& f) {
  const auto du = f.mesh.derivative(f.u), dv = f.mesh.derivative(f.v);
  const std::size_t m = f.size() - 2;
  Vec x(2 * m);
  for (std::size_t k = 0; k < m; ++k) {
    x[2 * k] = du[k + 1];
    x[2 * k + 1] = dv[k + 1];
  }
  return x;
}

SpMat shifted_matrix(const LinearOperator& op, double shift) {
  SpMat M = op.A;
  if (shift != 0.0) {
    for (Eigen::Index k = 0; k < op.B.size(); ++k) M.coeffRef(k, k) -= shift * op.B[k];
  }
  M.makeCompressed();
  return M;
}

void factor(LU& lu, const SpMat& M) {
  lu.compute(M);
  if (lu.info() != Eigen::Success) throw NumericalError("sparse LU factorization failed");
}

}  // namespace

LinearOperator assemble_operator(const ReactionModel& model, const FrontProfile& f, double ell) {
  const std::size_t n = f.size();
  if (n < 8) throw InputError("front profile too short for the linear operator");
  const std::size_t m = n - 2;
  const double d2 = f.delta * f.delta;
  const double l2 = ell * ell;
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(20 * m);
  auto col = [&](std::size_t node, int comp) -> long {
    if (node == 0 || node == n - 1) return -1;
    return static_cast<long>(2 * (node - 1) + comp);
  };
  for (std::size_t j = 1; j + 1 < n; ++j) {
    const std::size_t r = 2 * (j - 1);
    const StencilRow a = f.mesh.d1(j), b = f.mesh.d2(j);
    const Jacobian J = model.partials(f.u[j], f.v[j]);
    for (int k = 0; k < b.count; ++k) {
      const std::size_t node = b.first + k;
      const long cu = col(node, 0), cv = col(node, 1);
      if (cu >= 0) t.emplace_back(r, cu, b.w[k]);
      if (cv >= 0) t.emplace_back(r + 1, cv, b.w[k]);
    }
    for (int k = 0; k < a.count; ++k) {
      const std::size_t node = a.first + k;
      const long cu = col(node, 0), cv = col(node, 1);
      if (cu >= 0) t.emplace_back(r, cu, f.c * a.w[k]);
      if (cv >= 0) t.emplace_back(r + 1, cv, d2 * (f.nu + f.c) * a.w[k]);
    }
    t.emplace_back(r, r, J.Fu - l2);
    t.emplace_back(r, r + 1, J.Fv);
    t.emplace_back(r + 1, r, d2 * J.Gu);
    t.emplace_back(r + 1, r + 1, d2 * J.Gv - l2);
  }
  LinearOperator op;
  op.interior = m;
  op.A.resize(2 * m, 2 * m);
  op.A.setFromTriplets(t.begin(), t.end());
  op.A.makeCompressed();
  op.B.resize(2 * m);
  for (std::size_t k = 0; k < m; ++k) {
    op.B[2 * k] = 1.0;
    op.B[2 * k + 1] = d2;
  }
  return op;
}

AdjointSolution solve_adjoint(const ReactionModel& model, const FrontProfile& f,
                              const SpectralOptions& opt) {
  const LinearOperator op = assemble_operator(model, f, 0.0);
  const std::size_t n = f.size(), m = op.interior;
  LU lu;
  factor(lu, op.A);

  // Right kernel vector from the profile derivative.
  const Vec x0 = kernel_guess(f);
  Vec x = x0.normalized();
  for (int it = 0; it < 6; ++it) {
    Vec y = lu.solve(op.B.cwiseProduct(x));
    if (!y.allFinite()) throw NumericalError("adjoint: inverse iteration diverged");
    y.normalize();
    if (y.dot(x0) < 0) y = -y;
    const double change = (y - x).lpNorm<Eigen::Infinity>();
    x = y;
    if (change < 1e-14) break;
  }
  // Left kernel vector by inverse iteration on the transpose.
  Vec z = op.B.cwiseProduct(x).normalized();
  for (int it = 0; it < opt.max_iterations; ++it) {
    Vec y = lu.transpose().solve(op.B.cwiseProduct(z));
    if (!y.allFinite()) throw NumericalError("adjoint: transposed inverse iteration diverged");
    y.normalize();
    if (y.dot(z) < 0) y = -y;
    const double change = (y - z).lpNorm<Eigen::Infinity>();
    z = y;
    if (change < 1e-14) break;
  }
  AdjointSolution adj;
  const double zBx = z.dot(op.B.cwiseProduct(x));
  adj.eigenvalue = z.dot(op.A * x) / zBx;
  const Vec rl = op.A.transpose() * z - adj.eigenvalue * op.B.cwiseProduct(z);
  adj.residual = rl.lpNorm<Eigen::Infinity>() / z.lpNorm<Eigen::Infinity>();
  const Vec Bx0 = op.B.cwiseProduct(x0);
  adj.overlap = std::abs(z.dot(Bx0)) / (z.norm() * Bx0.norm());
  if (adj.overlap < 1e-10) {
    throw NumericalError("adjoint kernel is orthogonal to the front derivative (non-generic)");
  }

  // Next eigenvalue by inverse iteration deflated against the kernel pair.
  {
    std::mt19937_64 rng(20240601);
    std::normal_distribution<double> N(0.0, 1.0);
    Vec w(2 * m);
    for (Eigen::Index k = 0; k < w.size(); ++k) w[k] = N(rng);
    auto deflate = [&](Vec& v) { v -= x * (z.dot(op.B.cwiseProduct(v)) / zBx); };
    deflate(w);
    w.normalize();
    double log_growth = 0.0;
    int counted = 0;
    for (int it = 0; it < 30; ++it) {
      Vec y = lu.solve(op.B.cwiseProduct(w));
      deflate(y);
      const double g = y.norm();
      if (!(g > 0) || !std::isfinite(g)) break;
      if (it >= 20) {
        log_growth += std::log(g);
        ++counted;
      }
      w = y / g;
    }
    adj.next_eigenvalue = counted ? std::exp(-log_growth / counted) : kNaN;
    if (adj.next_eigenvalue < opt.simplicity_gap) {
      std::ostringstream os;
      os << "zero eigenvalue is not simple at the discrete level (next eigenvalue magnitude "
         << adj.next_eigenvalue << ")";
      throw NumericalError(os.str());
    }
  }

  // Continuous-adjoint representation uA = psi_u / w, vA = delta^2 psi_v / w.
  const auto wts = f.mesh.weights();
  const double d2 = f.delta * f.delta;
  adj.uA.assign(n, 0.0);
  adj.vA.assign(n, 0.0);
  adj.phi_u.assign(n, 0.0);
  adj.phi_v.assign(n, 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    adj.uA[k + 1] = z[2 * k] / wts[k + 1];
    adj.vA[k + 1] = d2 * z[2 * k + 1] / wts[k + 1];
  }
  const auto du = f.mesh.derivative(f.u), dv = f.mesh.derivative(f.v);
  double norm = 0.0;
  for (std::size_t j = 0; j < n; ++j) norm += wts[j] * (du[j] * adj.uA[j] + dv[j] * adj.vA[j]);
  if (!(std::abs(norm) > 0)) throw NumericalError("adjoint normalization vanished");
  for (std::size_t j = 0; j < n; ++j) {
    adj.uA[j] /= norm;
    adj.vA[j] /= norm;
  }
  const double scale = x.dot(x0) / x.dot(x);
  for (std::size_t k = 0; k < m; ++k) {
    adj.phi_u[k + 1] = scale * x[2 * k];
    adj.phi_v[k + 1] = scale * x[2 * k + 1];
  }

  // Continuous adjoint equations applied to (uA, vA).
  {
    double rmax = 0.0, amax = 0.0;
    for (std::size_t j = 0; j < n; ++j) amax = std::max({amax, std::abs(adj.uA[j]), std::abs(adj.vA[j])});
    auto apply = [&](const StencilRow& r, const std::vector<double>& g) {
      double s = 0.0;
      for (int k = 0; k < r.count; ++k) s += r.w[k] * g[r.first + k];
      return s;
    };
    for (std::size_t j = 1; j + 1 < n; ++j) {
      const StencilRow a = f.mesh.d1(j), b = f.mesh.d2(j);
      const Jacobian J = model.partials(f.u[j], f.v[j]);
      const double ru = apply(b, adj.uA) - f.c * apply(a, adj.uA) + J.Fu * adj.uA[j] + J.Gu * adj.vA[j];
      const double rv = apply(b, adj.vA) - d2 * (f.nu + f.c) * apply(a, adj.vA) +
                        d2 * (J.Fv * adj.uA[j] + J.Gv * adj.vA[j]);
      rmax = std::max({rmax, std::abs(ru), std::abs(rv)});
    }
    adj.continuous_residual = rmax / amax;
  }
  return adj;
}

namespace {

double quotient(const FrontProfile& f, const AdjointSolution& adj, const std::vector<double>& du,
                const std::vector<double>& dv) {
  const auto w = f.mesh.weights();
  const double d2 = f.delta * f.delta;
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) {
    num += w[j] * (du[j] * adj.uA[j] + dv[j] * adj.vA[j] / d2);
    den += w[j] * (du[j] * adj.uA[j] + dv[j] * adj.vA[j]);
  }
  if (std::abs(den) < 1e-12) throw NumericalError("lambda_c2 denominator vanishes");
  return -num / den;
}

}  // namespace

double lambda_c2_exact(const FrontProfile& f, const AdjointSolution& adj) {
  if (adj.uA.size() != f.size()) throw InputError("adjoint and front live on different meshes");
  return quotient(f, adj, f.mesh.derivative(f.u), f.mesh.derivative(f.v));
}

double lambda_c2_discrete(const FrontProfile& f, const AdjointSolution& adj) {
  if (adj.uA.size() != f.size()) throw InputError("adjoint and front live on different meshes");
  return quotient(f, adj, adj.phi_u, adj.phi_v);
}

CriticalEigenvalue critical_eigenvalue(const ReactionModel& model, const FrontProfile& f,
                                       double ell, double shift, const Eigen::VectorXd& x0,
                                       const SpectralOptions& opt) {
  const LinearOperator op = assemble_operator(model, f, ell);
  LU lu;
  factor(lu, shifted_matrix(op, shift));
  Vec x = (x0.size() == op.A.rows() ? x0 : kernel_guess(f)).normalized();
  const Vec ref = x;
  CriticalEigenvalue out;
  out.ell = ell;
  double mu_prev = kNaN;
  for (int it = 1; it <= opt.max_iterations; ++it) {
    const Vec y = lu.solve(op.B.cwiseProduct(x));
    if (!y.allFinite()) throw NumericalError("critical eigenvalue: inverse iteration diverged");
    const double mu = x.dot(x) / x.dot(y);  // lambda - shift
    x = y.normalized();
    if (x.dot(ref) < 0) x = -x;
    if (it >= 3 && std::abs(mu - mu_prev) <= opt.eigen_tolerance * std::max(1.0, std::abs(shift)) +
                                                 1e-10 * std::abs(mu)) {
      out.lambda = shift + mu;
      out.iterations = it;
      out.vector = x;
      return out;
    }
    mu_prev = mu;
  }
  std::ostringstream os;
  os << "eigenvalue tracking ambiguity at ell = " << ell
     << ": inverse iteration did not settle (competing eigenvalue near the shift)";
  throw NumericalError(os.str());
}

namespace {

OracleFit fit_window(const ReactionModel& model, const FrontProfile& f, const CriticalEigenvalue& base,
                     double ell0, const SpectralOptions& opt) {
  OracleFit fit;
  fit.ell0 = ell0;
  fit.lambda0 = base.lambda;
  Vec x = base.vector;
  double d1 = 0.0;
  for (int k = 1; k <= opt.ell_points; ++k) {
    const double ell = k * ell0;
    const double shift = k == 1 ? base.lambda : base.lambda + d1 * k * k;
    const CriticalEigenvalue e = critical_eigenvalue(model, f, ell, shift, x, opt);
    if (k == 1) d1 = e.lambda - base.lambda;
    x = e.vector;
    fit.ells.push_back(ell);
    fit.lambdas.push_back(e.lambda);
  }
  // Least squares for a t + b t^2 with t = (ell/ell0)^2.
  double s11 = 0, s12 = 0, s22 = 0, r1 = 0, r2 = 0;
  for (std::size_t i = 0; i < fit.ells.size(); ++i) {
    const double t = std::pow(fit.ells[i] / ell0, 2), d = fit.lambdas[i] - fit.lambda0;
    s11 += t * t;
    s12 += t * t * t;
    s22 += t * t * t * t;
    r1 += t * d;
    r2 += t * t * d;
  }
  const double det = s11 * s22 - s12 * s12;
  const double a = (r1 * s22 - r2 * s12) / det, b = (s11 * r2 - s12 * r1) / det;
  fit.lambda2 = a / (ell0 * ell0);
  fit.quartic = b / std::pow(ell0, 4);
  double res = 0.0, mag = 0.0;
  for (std::size_t i = 0; i < fit.ells.size(); ++i) {
    const double t = std::pow(fit.ells[i] / ell0, 2), d = fit.lambdas[i] - fit.lambda0;
    res = std::max(res, std::abs(a * t + b * t * t - d));
    mag = std::max(mag, std::abs(d));
  }
  fit.fit_residual = mag > 0 ? res / mag : 0.0;
  if (std::abs(b) > 0.5 * std::abs(a)) {
    throw NumericalError("oracle: quartic term dominates the fit window");
  }
  return fit;
}

}  // namespace

OracleFit lambda_c2_oracle(const ReactionModel& model, const FrontProfile& f,
                           const SpectralOptions& opt) {
  if (opt.ell_points < 2) throw InputError("oracle needs at least two nonzero wavenumbers");
  double ell0 = opt.ell0 > 0 ? opt.ell0
                             : 1e-2 * std::min(1.0, f.delta * std::sqrt(f.nu) + f.delta);
  const CriticalEigenvalue base = critical_eigenvalue(model, f, 0.0, 0.0, {}, opt);
  std::optional<OracleFit> prev;
  std::string last_error = "oracle failed";
  for (int halving = 0; halving <= opt.max_halvings; ++halving, ell0 *= 0.5) {
    OracleFit fit;
    try {
      fit = fit_window(model, f, base, ell0, opt);
    } catch (const NumericalError& e) {
      last_error = e.what();
      prev.reset();
      continue;
    }
    if (opt.window_rtol <= 0) return fit;
    if (prev && std::abs(fit.lambda2 - prev->lambda2) <=
                    opt.window_rtol * std::abs(fit.lambda2) + opt.window_atol) {
      return fit;
    }
    prev = fit;
  }
  if (prev) {
    throw NumericalError("oracle: lambda_c2 estimate did not settle under window halving");
  }
  throw NumericalError(last_error);
}

StabilityReport stability_report(const FrontSetup& setup, const FrontProfile& front,
                                 const StabilityOptions& opt) {
  StabilityReport r;
  r.delta = front.delta;
  r.nu = front.nu;
  r.c = front.c;
  r.regime = classify_regime(front.delta, front.nu).tag;
  const AdjointSolution adj = solve_adjoint(*setup.model, front, opt.spectral);
  r.lambda2_exact = lambda_c2_exact(front, adj);
  r.lambda2_discrete = lambda_c2_discrete(front, adj);
  r.adjoint_residual = adj.residual;
  r.adjoint_continuous_residual = adj.continuous_residual;
  r.kernel_eigenvalue = adj.eigenvalue;
  r.next_eigenvalue = adj.next_eigenvalue;
  r.relative_gap = kNaN;
  r.oracle_fit_residual = kNaN;
  if (opt.oracle) {
    const OracleFit fit = lambda_c2_oracle(*setup.model, front, opt.spectral);
    r.lambda2_oracle = fit.lambda2;
    r.oracle_fit_residual = fit.fit_residual;
    r.relative_gap = std::abs(r.lambda2_exact - fit.lambda2) / std::abs(r.lambda2_exact);
  }
  r.lambda2_asymptotic = kNaN;
  if (opt.asymptotic) {
    try {
      r.lambda2_asymptotic = singular_skeleton(setup, front.delta, front.nu).report.lambda2;
    } catch (const std::exception&) {
    }
  }
  r.mesh_drift = kNaN;
  if (opt.mesh_check) {
    const FrontProfile fine = solve_front_bvp(setup, remesh(front, front.mesh.refined().spec()), opt.front);
    const AdjointSolution a2 = solve_adjoint(*setup.model, fine, opt.spectral);
    r.mesh_drift = std::abs(lambda_c2_exact(fine, a2) - r.lambda2_exact) / std::abs(r.lambda2_exact);
  }
  return r;
}

double lambda_c2_at(const FrontSetup& setup, double delta, double nu, const StabilityOptions& opt,
                    FrontProfile* warm) {
  FrontProfile front;
  bool have = false;
  if (warm && warm->size() > 0 && warm->delta == delta) {
    if (warm->nu == nu) {
      front = *warm;
      have = true;
    } else {
      const FrontBranch br = continue_front(setup, *warm, ContinuationParameter::Nu, nu, {}, opt.front);
      if (br.completed) {
        front = br.points.back().profile;
        have = true;
      }
    }
  }
  if (!have) front = solve_front(setup, delta, nu, opt.front);
  if (warm) *warm = front;
  const AdjointSolution adj = solve_adjoint(*setup.model, front, opt.spectral);
  return lambda_c2_exact(front, adj);
}

std::pair<double, double> loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InputError("log-log fit needs two or more points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0) || !(y[i] > 0)) throw InputError("log-log fit needs positive data");
    const double a = std::log(x[i]), b = std::log(y[i]);
    sx += a;
    sy += b;
    sxx += a * a;
    sxy += a * b;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return {slope, (sy - slope * sx) / n};
}

ContourResult zero_contour(const FrontSetup& setup, const std::vector<double>& deltas,
                           const ContourOptions& opt) {
  if (deltas.empty()) throw InputError("zero contour needs at least one delta");
  ContourResult res;
  res.points.resize(deltas.size());
  std::vector<std::string> errors(deltas.size());
  parallel_for(deltas.size(), [&](std::size_t i) {
    const double delta = deltas[i];
    ContourPoint& pt = res.points[i];
    pt.delta = delta;
    try {
      const auto rep = singular_skeleton(setup, delta, 1.0 / delta).report;
      double seed = 1.0 / delta;
      for (double cand : {rep.nu_crit_G, rep.nu_crit_G2, rep.nu_crit_full}) {
        if (std::isfinite(cand) && cand > 0) seed = cand;
      }
      pt.nu_crit_asymptotic = seed;
      FrontProfile warm;
      auto lam = [&](double nu) {
        ++pt.evaluations;
        return lambda_c2_at(setup, delta, nu, opt.stability, &warm);
      };
      double a = seed, fa = lam(a);
      double b = a, fb = fa;
      for (int k = 0; k < 30 && fa * fb > 0; ++k) {
        a = b;
        fa = fb;
        b = fa > 0 ? b * opt.bracket_factor : b / opt.bracket_factor;
        fb = lam(b);
      }
      if (fa * fb > 0) throw NumericalError("no sign change of lambda_c2 in the bracket");
      if (a > b) {
        std::swap(a, b);
        std::swap(fa, fb);
      }
      boost::uintmax_t iters = static_cast<boost::uintmax_t>(opt.max_evaluations);
      const auto r = boost::math::tools::toms748_solve(
          lam, a, b, fa, fb,
          [&](double x, double y) { return std::abs(x - y) <= opt.rel_tolerance * std::min(x, y); },
          iters);
      pt.nu_star = 0.5 * (r.first + r.second);
    } catch (const std::exception& e) {
      errors[i] = "delta = " + std::to_string(delta) + ": " + e.what();
    }
  });
  for (const auto& e : errors) {
    if (!e.empty()) throw NumericalError("zero contour failed at " + e);
  }
  std::vector<double> x, y;
  for (const auto& p : res.points) {
    x.push_back(p.delta);
    y.push_back(p.nu_star);
  }
  if (x.size() >= 2) std::tie(res.slope, res.intercept) = loglog_fit(x, y);
  return res;
}

}  // namespace advfront
