#include "advfront/equilibria.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "advfront/parallel.hpp"

namespace advfront {

double DispersionCoefficients::margin() const { return std::min(p1, second_condition()); }

std::pair<std::complex<double>, std::complex<double>> DispersionCoefficients::roots() const {
  const std::complex<double> b(p1, q1), c(p2, q2);
  const std::complex<double> s = std::sqrt(b * b - 4.0 * c);
  // Pick the numerically larger root first, then use the product of roots.
  const std::complex<double> r1 = (std::abs(-b + s) > std::abs(-b - s) ? -b + s : -b - s) / 2.0;
  const std::complex<double> r2 = r1 != 0.0 ? c / r1 : -b - r1;
  return {r1, r2};
}

DispersionCoefficients dispersion_coefficients(const Jacobian& j, double delta, double nu,
                                               double k, double ell) {
  if (!(delta > 0) || !(nu >= 0)) throw InputError("dispersion requires delta > 0, nu >= 0");
  const double K = k * k + ell * ell;
  const double id2 = 1.0 / (delta * delta);
  DispersionCoefficients d;
  d.p1 = (1.0 + id2) * K - j.Fu - j.Gv;
  d.q1 = -nu * k;
  d.p2 = j.det() - (j.Fu * id2 + j.Gv) * K + id2 * K * K;
  d.q2 = -nu * k * K + nu * k * j.Fu;
  return d;
}

DispersionCoefficients dispersion_coefficients(const SteadyState& state, double delta, double nu,
                                               double k, double ell) {
  return dispersion_coefficients(state.jac, delta, nu, k, ell);
}

double dispersion_turnover_scale(const Jacobian& j, double delta) {
  return std::max(1.0, 1.0 / delta) * std::sqrt(std::abs(j.Fu) + std::abs(j.Gv));
}

namespace {

// Scale-free version of the margin used to rank samples: the sign matches the
// raw margin, the magnitude is relative to the size of the individual terms.
double normalized_margin(const DispersionCoefficients& d, const Jacobian& j) {
  const double c1 = d.p1 / (std::abs(d.p1) + std::abs(j.Fu) + std::abs(j.Gv) + 1e-300);
  const double scale = d.p1 * d.p1 * std::abs(d.p2) + std::abs(d.p1 * d.q1 * d.q2) + d.q2 * d.q2;
  const double c2 = d.second_condition() / (scale + 1e-300);
  return std::min(c1, c2);
}

struct NmPoint {
  std::array<double, 2> x;
  double f;
};

// Nelder-Mead on (log10 k, log10 l) with the standard coefficients.
template <typename Fn>
NmPoint nelder_mead(Fn&& fn, std::array<double, 2> x0, double step, int max_iter) {
  std::array<NmPoint, 3> s;
  s[0] = {x0, fn(x0)};
  s[1] = {{x0[0] + step, x0[1]}, 0};
  s[2] = {{x0[0], x0[1] + step}, 0};
  s[1].f = fn(s[1].x);
  s[2].f = fn(s[2].x);
  auto lerp = [](const std::array<double, 2>& a, const std::array<double, 2>& b, double t) {
    return std::array<double, 2>{a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])};
  };
  for (int it = 0; it < max_iter; ++it) {
    std::sort(s.begin(), s.end(), [](const NmPoint& a, const NmPoint& b) { return a.f < b.f; });
    if (std::abs(s[2].f - s[0].f) < 1e-14 &&
        std::hypot(s[2].x[0] - s[0].x[0], s[2].x[1] - s[0].x[1]) < 1e-10) {
      break;
    }
    const std::array<double, 2> centroid{0.5 * (s[0].x[0] + s[1].x[0]),
                                         0.5 * (s[0].x[1] + s[1].x[1])};
    NmPoint r{lerp(centroid, s[2].x, -1.0), 0};
    r.f = fn(r.x);
    if (r.f < s[0].f) {
      NmPoint e{lerp(centroid, s[2].x, -2.0), 0};
      e.f = fn(e.x);
      s[2] = e.f < r.f ? e : r;
    } else if (r.f < s[1].f) {
      s[2] = r;
    } else {
      NmPoint c{lerp(centroid, s[2].x, 0.5), 0};
      c.f = fn(c.x);
      if (c.f < s[2].f) {
        s[2] = c;
      } else {
        for (int i = 1; i < 3; ++i) {
          s[i].x = lerp(s[0].x, s[i].x, 0.5);
          s[i].f = fn(s[i].x);
        }
      }
    }
  }
  std::sort(s.begin(), s.end(), [](const NmPoint& a, const NmPoint& b) { return a.f < b.f; });
  return s[0];
}

}  // namespace

EquilibriumStabilityReport check_equilibrium_stability(const SteadyState& state, double delta,
                                                       double nu,
                                                       const EquilibriumStabilityOptions& opt) {
  const Jacobian& j = state.jac;
  const double turnover = dispersion_turnover_scale(j, delta);
  EquilibriumStabilityReport rep;
  rep.k_max = opt.k_max > 0 ? opt.k_max : 10.0 * turnover;
  rep.ell_max = opt.ell_max > 0 ? opt.ell_max : 10.0 * turnover;
  if (rep.k_max < turnover || rep.ell_max < turnover) {
    std::ostringstream os;
    os << "dispersion window (" << rep.k_max << ", " << rep.ell_max
       << ") below the turnover scale " << turnover;
    throw InputError(os.str());
  }
  if (opt.n_grid < 2) throw InputError("n_grid must be >= 2");
  rep.k_min = rep.k_max * std::pow(10.0, -opt.decades);
  rep.ell_min = rep.ell_max * std::pow(10.0, -opt.decades);

  // Axis values: zero followed by a log grid.
  const int n = opt.n_grid;
  std::vector<double> ks(n + 1, 0.0), ls(n + 1, 0.0);
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / (n - 1);
    ks[i + 1] = rep.k_min * std::pow(rep.k_max / rep.k_min, t);
    ls[i + 1] = rep.ell_min * std::pow(rep.ell_max / rep.ell_min, t);
  }

  const std::size_t total = ks.size() * ls.size();
  std::vector<double> score(total);
  std::vector<DispersionSample> samples(total);
  parallel_for(total, [&](std::size_t idx) {
    const double k = ks[idx / ls.size()], l = ls[idx % ls.size()];
    const auto d = dispersion_coefficients(j, delta, nu, k, l);
    score[idx] = normalized_margin(d, j);
    samples[idx] = {k, l, d.p1, d.margin()};
  });

  // Index-ordered reduction.
  std::size_t best = 0;
  for (std::size_t i = 1; i < total; ++i) {
    if (score[i] < score[best]) best = i;
  }
  double best_score = score[best];
  double bk = samples[best].k, bl = samples[best].ell;
  bool any_negative = false;
  for (const auto& s : samples) any_negative |= !(s.margin > 0.0);

  const std::size_t bi = best / ls.size(), bj = best % ls.size();
  if (bi == ks.size() - 1 || bj == ls.size() - 1) {
    rep.warnings.push_back("margin minimum on the outer grid boundary; window may be too small");
  }

  // Refine from the grid minimum in log coordinates; zero coordinates are
  // replaced by the smallest grid value.
  auto fn = [&](const std::array<double, 2>& x) {
    const double k = std::clamp(std::pow(10.0, x[0]), 0.0, rep.k_max);
    const double l = std::clamp(std::pow(10.0, x[1]), 0.0, rep.ell_max);
    return normalized_margin(dispersion_coefficients(j, delta, nu, k, l), j);
  };
  const std::array<double, 2> x0{std::log10(std::max(bk, rep.k_min)),
                                 std::log10(std::max(bl, rep.ell_min))};
  const double step = opt.decades / std::max(1, n - 1);
  const NmPoint refined = nelder_mead(fn, x0, step, 400);
  double rk = std::min(std::pow(10.0, refined.x[0]), rep.k_max);
  double rl = std::min(std::pow(10.0, refined.x[1]), rep.ell_max);
  const double refined_raw = dispersion_coefficients(j, delta, nu, rk, rl).margin();
  if (refined.f < best_score) {
    best_score = refined.f;
    bk = rk;
    bl = rl;
  }
  any_negative |= !(refined_raw > 0.0);

  rep.argmin_k = bk;
  rep.argmin_ell = bl;
  rep.worst_margin = dispersion_coefficients(j, delta, nu, bk, bl).margin();
  rep.stable = !any_negative && rep.worst_margin > 0.0;
  if (opt.keep_samples) rep.samples = std::move(samples);
  return rep;
}

}  // namespace advfront
