#include "advfront/kinetics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

namespace advfront {

namespace {

void require_finite(double u, double v) {
  if (!std::isfinite(u) || !std::isfinite(v)) {
    throw InputError("reaction evaluated at non-finite point");
  }
}

// Newton on F(., v) = 0 in u starting from u0. Returns NaN when it fails.
double polish_root_u(const ReactionModel& m, double u0, double v) {
  double u = u0;
  for (int it = 0; it < 60; ++it) {
    const double f = m.F(u, v);
    const double fu = m.partials(u, v).Fu;
    if (fu == 0.0) break;
    const double du = f / fu;
    u -= du;
    if (std::abs(du) <= 1e-15 * std::max(1.0, std::abs(u))) return u;
  }
  return std::abs(m.F(u, v)) < 1e-10 ? u : std::numeric_limits<double>::quiet_NaN();
}

std::vector<double> roots_in_u(const ReactionModel& m, double v, double u_lo, double u_hi,
                               int n) {
  std::vector<double> roots;
  const double du = (u_hi - u_lo) / n;
  double a = u_lo;
  double fa = m.F(a, v);
  if (fa == 0.0) roots.push_back(a);
  for (int i = 1; i <= n; ++i) {
    const double b = u_lo + i * du;
    const double fb = m.F(b, v);
    if (fb == 0.0) {
      roots.push_back(b);
    } else if (fa * fb < 0.0) {
      double lo = a, hi = b, flo = fa;
      for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = m.F(mid, v);
        if ((fm < 0.0) == (flo < 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      roots.push_back(0.5 * (lo + hi));
    }
    a = b;
    fa = fb;
  }
  return roots;
}

}  // namespace

Jacobian ReactionModel::finite_difference_partials(double u, double v) const {
  const double hu = 1e-6 * std::max(1.0, std::abs(u));
  const double hv = 1e-6 * std::max(1.0, std::abs(v));
  Jacobian j;
  j.Fu = (F(u + hu, v) - F(u - hu, v)) / (2 * hu);
  j.Fv = (F(u, v + hv) - F(u, v - hv)) / (2 * hv);
  j.Gu = (G(u + hu, v) - G(u - hu, v)) / (2 * hu);
  j.Gv = (G(u, v + hv) - G(u, v - hv)) / (2 * hv);
  return j;
}

Jacobian ReactionModel::partials(double u, double v) const {
  return finite_difference_partials(u, v);
}

std::vector<NullclineBranch> ReactionModel::nullcline_branches(double v_lo, double v_hi,
                                                               double u_lo, double u_hi) const {
  if (!(v_hi > v_lo) || !(u_hi > u_lo)) throw InputError("empty nullcline window");
  constexpr int kV = 400;
  constexpr int kU = 400;

  struct Track {
    std::vector<double> vs, us;
    bool lo_fold = false, hi_fold = false;
  };
  std::vector<Track> done;
  std::vector<Track> open;

  for (int i = 0; i <= kV; ++i) {
    const double v = v_lo + (v_hi - v_lo) * i / kV;
    auto roots = roots_in_u(*this, v, u_lo, u_hi, kU);
    if (roots.size() != open.size()) {
      // Root count changed: a fold or a branch leaving the u-window. Close the
      // current tracks and start fresh ones.
      for (auto& t : open) {
        t.hi_fold = std::abs(partials(t.us.back(), t.vs.back()).Fu) < 1e-2;
        done.push_back(std::move(t));
      }
      open.clear();
      for (double r : roots) {
        Track t;
        t.vs.push_back(v);
        t.us.push_back(r);
        t.lo_fold = i > 0 && std::abs(partials(r, v).Fu) < 1e-2;
        open.push_back(std::move(t));
      }
      continue;
    }
    for (std::size_t k = 0; k < roots.size(); ++k) {
      open[k].vs.push_back(v);
      open[k].us.push_back(roots[k]);
    }
  }
  for (auto& t : open) done.push_back(std::move(t));

  std::vector<NullclineBranch> out;
  int idx = 0;
  for (auto& t : done) {
    if (t.vs.size() < 2) continue;
    NullclineBranch b;
    b.label = "S" + std::to_string(idx++);
    b.domain = {t.vs.front(), t.vs.back(), t.lo_fold, t.hi_fold};
    auto vs = std::make_shared<std::vector<double>>(std::move(t.vs));
    auto us = std::make_shared<std::vector<double>>(std::move(t.us));
    const ReactionModel* self = this;
    b.f = [self, vs, us](double v) {
      auto it = std::lower_bound(vs->begin(), vs->end(), v);
      std::size_t k = std::clamp<std::size_t>(it - vs->begin(), 1, vs->size() - 1);
      const double w = ((*vs)[k] - v) / ((*vs)[k] - (*vs)[k - 1]);
      const double guess = w * (*us)[k - 1] + (1 - w) * (*us)[k];
      return polish_root_u(*self, guess, v);
    };
    auto f = b.f;
    b.fprime = [self, f](double v) {
      const double u = f(v);
      const Jacobian j = self->partials(u, v);
      return -j.Fv / j.Fu;
    };
    out.push_back(std::move(b));
  }
  return out;
}

KlausmeierModel::KlausmeierModel(double mu1, double mu2, double mu3)
    : mu1_(mu1), mu2_(mu2), mu3_(mu3) {
  if (!(mu1 > 0) || !(mu2 > 0) || !(mu3 > 0)) {
    throw InputError("Klausmeier parameters must be positive");
  }
}

double KlausmeierModel::F(double u, double v) const {
  require_finite(u, v);
  return -mu1_ * u + u * u * v * (1.0 - mu2_ * u);
}

double KlausmeierModel::G(double u, double v) const {
  require_finite(u, v);
  return mu3_ - v - u * u * v;
}

Jacobian KlausmeierModel::partials(double u, double v) const {
  require_finite(u, v);
  Jacobian j;
  j.Fu = -mu1_ + 2.0 * u * v - 3.0 * mu2_ * u * u * v;
  j.Fv = u * u * (1.0 - mu2_ * u);
  j.Gu = -2.0 * u * v;
  j.Gv = -1.0 - u * u;
  return j;
}

double KlausmeierModel::branch_u(double v, int sign) const {
  if (v < fold_v()) throw InputError("Klausmeier branch evaluated below the fold");
  const double disc = std::max(0.0, 1.0 - fold_v() / v);
  return (1.0 + sign * std::sqrt(disc)) / (2.0 * mu2_);
}

double KlausmeierModel::branch_du(double v, int sign) const {
  // d/dV of sqrt(1 - a/V) = a / (2 V^2 sqrt(1 - a/V)).
  const double a = fold_v();
  const double disc = 1.0 - a / v;
  if (disc <= 0.0) return sign * std::numeric_limits<double>::infinity();
  return sign * a / (2.0 * v * v * std::sqrt(disc)) / (2.0 * mu2_);
}

std::vector<NullclineBranch> KlausmeierModel::nullcline_branches(double v_lo, double v_hi,
                                                                 double, double) const {
  if (!(v_hi > v_lo)) throw InputError("empty nullcline window");
  std::vector<NullclineBranch> out;
  NullclineBranch desert;
  desert.label = "S-";
  desert.domain = {v_lo, v_hi, false, false};
  desert.f = [](double) { return 0.0; };
  desert.fprime = [](double) { return 0.0; };
  out.push_back(desert);

  const double lo = std::max(v_lo, fold_v());
  if (lo < v_hi) {
    const bool fold = lo == fold_v();
    for (int sign : {+1, -1}) {
      NullclineBranch b;
      b.label = sign > 0 ? "S+" : "Sm";
      b.domain = {lo, v_hi, fold, false};
      b.f = [this, sign](double v) { return branch_u(v, sign); };
      b.fprime = [this, sign](double v) { return branch_du(v, sign); };
      out.push_back(std::move(b));
    }
  }
  return out;
}

bool KlausmeierModel::has_vegetated_states() const {
  return mu3_ / mu1_ > 2.0 * (mu2_ + std::sqrt(1.0 + mu2_ * mu2_));
}

bool KlausmeierModel::upper_state_pde_stable() const {
  return mu3_ / mu1_ > 4.0 * mu2_ + 1.0 / mu2_;
}

FunctionModel::FunctionModel(std::string name, std::vector<double> params, Fn f, Fn g,
                             std::optional<JacFn> jac)
    : name_(std::move(name)),
      params_(std::move(params)),
      f_(std::move(f)),
      g_(std::move(g)),
      jac_(std::move(jac)) {}

Jacobian FunctionModel::partials(double u, double v) const {
  if (jac_) return (*jac_)(u, v);
  return finite_difference_partials(u, v);
}

ReactionValues eval_reaction(const ReactionModel& model, double u, double v) {
  require_finite(u, v);
  return {model.F(u, v), model.G(u, v)};
}

bool bistable_admissible(const Jacobian& j) {
  return j.Fu < 0.0 && j.Gv < 0.0 && j.det() > 0.0;
}

SteadyState make_steady_state(const ReactionModel& model, double U, double V,
                              const NullclineBranch* branch) {
  SteadyState s;
  s.U = U;
  s.V = V;
  s.jac = model.partials(U, V);
  s.branch = branch ? branch->label : "";
  if (s.jac.Fu != 0.0) {
    const double fp = branch ? branch->fprime(V) : -s.jac.Fv / s.jac.Fu;
    s.kappa = s.jac.Gu * fp + s.jac.Gv;
  } else {
    s.kappa = std::numeric_limits<double>::quiet_NaN();
  }
  s.bistable_admissible = bistable_admissible(s.jac);
  return s;
}

namespace {

// Newton refinement of a root of (F, G); returns false if not converged.
bool newton_2d(const ReactionModel& m, double& u, double& v) {
  for (int it = 0; it < 100; ++it) {
    const double f = m.F(u, v), g = m.G(u, v);
    const Jacobian j = m.partials(u, v);
    const double det = j.det();
    if (det == 0.0 || !std::isfinite(det)) return false;
    const double du = (f * j.Gv - g * j.Fv) / det;
    const double dv = (g * j.Fu - f * j.Gu) / det;
    u -= du;
    v -= dv;
    if (!std::isfinite(u) || !std::isfinite(v)) return false;
    if (std::abs(du) + std::abs(dv) < 1e-15 * (1.0 + std::abs(u) + std::abs(v))) break;
  }
  return std::abs(m.F(u, v)) < 1e-12 && std::abs(m.G(u, v)) < 1e-12;
}

}  // namespace

SteadyStateResult find_steady_states(const ReactionModel& model, const SteadyStateSearch& search) {
  SteadyStateResult result;
  if (const auto* k = dynamic_cast<const KlausmeierModel*>(&model)) {
    const double mu1 = k->mu1(), mu2 = k->mu2(), mu3 = k->mu3();
    const auto branches = k->nullcline_branches(std::min(search.v_lo, 0.0),
                                                std::max(search.v_hi, 2 * mu3), 0, 0);
    result.states.push_back(make_steady_state(model, 0.0, mu3, &branches[0]));
    if (!k->has_vegetated_states()) {
      std::ostringstream os;
      os << "mu3/mu1 = " << mu3 / mu1 << " <= 2(mu2 + sqrt(1 + mu2^2)) = "
         << 2.0 * (mu2 + std::sqrt(1.0 + mu2 * mu2)) << ": only the desert state exists";
      result.note = os.str();
      return result;
    }
    const double a = mu1 + mu2 * mu3;
    const double disc = std::sqrt(mu3 * mu3 - 4.0 * mu1 * a);
    for (double sgn : {-1.0, +1.0}) {
      double U = (mu3 + sgn * disc) / (2.0 * a);
      double V = mu3 - mu1 * U / (1.0 - mu2 * U);
      newton_2d(model, U, V);
      // Which vegetated branch contains the state: U_F^+ iff U >= 1/(2 mu2).
      const NullclineBranch* br = nullptr;
      for (const auto& b : branches) {
        if (b.label == (U >= 0.5 / mu2 ? "S+" : "Sm")) br = &b;
      }
      result.states.push_back(make_steady_state(model, U, V, br));
    }
    return result;
  }

  std::vector<std::pair<double, double>> roots;
  const int n = std::max(2, search.seeds_per_axis);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double u = search.u_lo + (search.u_hi - search.u_lo) * i / (n - 1);
      double v = search.v_lo + (search.v_hi - search.v_lo) * j / (n - 1);
      if (!newton_2d(model, u, v)) continue;
      if (u < search.u_lo || u > search.u_hi || v < search.v_lo || v > search.v_hi) continue;
      const bool dup = std::any_of(roots.begin(), roots.end(), [&](const auto& r) {
        return std::hypot(r.first - u, r.second - v) < search.dedup_distance;
      });
      if (!dup) roots.emplace_back(u, v);
    }
  }
  std::sort(roots.begin(), roots.end());
  for (auto [u, v] : roots) result.states.push_back(make_steady_state(model, u, v, nullptr));
  if (result.states.empty()) result.note = "no steady states in the search window";
  return result;
}

ModelPtr make_model(const std::string& name, const std::vector<double>& mu) {
  if (name == "klausmeier") {
    if (mu.size() != 3) throw InputError("klausmeier expects mu = [mu1, mu2, mu3]");
    return std::make_shared<KlausmeierModel>(mu[0], mu[1], mu[2]);
  }
  throw InputError("unknown model '" + name + "'");
}

}  // namespace advfront
