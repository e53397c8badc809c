#include "advfront/singular_orbits.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/tools/roots.hpp>

#include "ode.hpp"

namespace advfront {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Quintic Hermite interpolation from values, first and second derivatives.
struct Quintic {
  double f, d1, d2;
};

Quintic quintic(double f0, double g0, double s0, double f1, double g1, double s1, double h,
                double t) {
  const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
  const double H0 = 1 - 10 * t3 + 15 * t4 - 6 * t5;
  const double H1 = t - 6 * t3 + 8 * t4 - 3 * t5;
  const double H2 = 0.5 * (t2 - 3 * t3 + 3 * t4 - t5);
  const double H3 = 10 * t3 - 15 * t4 + 6 * t5;
  const double H4 = -4 * t3 + 7 * t4 - 3 * t5;
  const double H5 = 0.5 * (t3 - 2 * t4 + t5);
  const double D0 = -30 * t2 + 60 * t3 - 30 * t4;
  const double D1 = 1 - 18 * t2 + 32 * t3 - 15 * t4;
  const double D2 = 0.5 * (2 * t - 9 * t2 + 12 * t3 - 5 * t4);
  const double D4 = -12 * t2 + 28 * t3 - 15 * t4;
  const double D5 = 0.5 * (3 * t2 - 8 * t3 + 5 * t4);
  const double E0 = -60 * t + 180 * t2 - 120 * t3;
  const double E1 = -36 * t + 96 * t2 - 60 * t3;
  const double E2 = 0.5 * (2 - 18 * t + 36 * t2 - 20 * t3);
  const double E4 = -24 * t + 84 * t2 - 60 * t3;
  const double E5 = 0.5 * (6 * t - 24 * t2 + 20 * t3);
  Quintic q;
  q.f = f0 * H0 + h * g0 * H1 + h * h * s0 * H2 + f1 * H3 + h * g1 * H4 + h * h * s1 * H5;
  q.d1 = (f0 * D0 + h * g0 * D1 + h * h * s0 * D2 - f1 * D0 + h * g1 * D4 + h * h * s1 * D5) / h;
  q.d2 = (f0 * E0 + h * g0 * E1 + h * h * s0 * E2 - f1 * E0 + h * g1 * E4 + h * h * s1 * E5) /
         (h * h);
  return q;
}

double sgn(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

void require_in_domain(const NullclineBranch& b, double v, const char* what) {
  if (!b.domain.contains(v)) {
    std::ostringstream os;
    os << what << ": v = " << v << " outside the domain [" << b.domain.lo << ", " << b.domain.hi
       << "] of branch " << b.label;
    throw InputError(os.str());
  }
}

}  // namespace

std::string to_string(Regime r) {
  switch (r) {
    case Regime::Weak:
      return "weak";
    case Regime::Intermediate:
      return "intermediate";
    case Regime::Strong:
      return "strong";
  }
  return "unknown";
}

RegimeParams classify_regime(double delta, double nu, const RegimeThresholds& th) {
  if (!(delta > 0) || !(nu >= 0) || !std::isfinite(nu)) {
    throw InputError("regime classification requires delta > 0 and finite nu >= 0");
  }
  if (!(th.r0 > 0 && th.r0 < 1)) throw InputError("r0 must lie in (0, 1)");
  RegimeParams p;
  p.delta = delta;
  p.nu = nu;
  p.r = delta * delta * nu;
  p.eps = nu > 0 ? 1.0 / nu : std::numeric_limits<double>::infinity();
  p.rbar = delta * nu;
  p.deltabar = p.r > 0 ? delta / p.r : std::numeric_limits<double>::infinity();
  p.thresholds = th;
  if (nu <= 1.0 / delta) {
    p.tag = Regime::Weak;
  } else if (nu >= th.r0 / (delta * delta)) {
    p.tag = Regime::Strong;
  } else {
    p.tag = Regime::Intermediate;
  }
  return p;
}

FrontSetup klausmeier_setup(std::shared_ptr<const KlausmeierModel> model,
                            Orientation orientation) {
  const auto states = find_steady_states(*model);
  if (states.states.size() < 3) {
    throw InputError(states.note.value_or("Klausmeier vegetated states missing"));
  }
  const double vmax = 2.0 * std::max(model->mu3(), 1.0);
  const auto branches = model->nullcline_branches(0.0, vmax, 0.0, 0.0);
  const NullclineBranch* s_minus = nullptr;
  const NullclineBranch* s_plus = nullptr;
  for (const auto& b : branches) {
    if (b.label == "S-") s_minus = &b;
    if (b.label == "S+") s_plus = &b;
  }
  if (!s_minus || !s_plus) throw InputError("Klausmeier branches unavailable");
  FrontSetup s;
  s.model = model;
  const SteadyState& desert = states.states[0];
  const SteadyState& upper = states.states[2];
  if (orientation == Orientation::DesertLeft) {
    s.minus = desert;
    s.plus = upper;
    s.branch_minus = *s_minus;
    s.branch_plus = *s_plus;
  } else {
    s.minus = upper;
    s.plus = desert;
    s.branch_minus = *s_plus;
    s.branch_plus = *s_minus;
  }
  return s;
}

FrontSetup make_front_setup(ModelPtr model, const SteadyState& minus, const SteadyState& plus,
                            const SteadyStateSearch& window) {
  const auto branches =
      model->nullcline_branches(window.v_lo, window.v_hi, window.u_lo, window.u_hi);
  auto find = [&](const SteadyState& st) -> const NullclineBranch& {
    const NullclineBranch* best = nullptr;
    double err = 1e-6 * (1.0 + std::abs(st.U));
    for (const auto& b : branches) {
      if (!b.domain.contains(st.V)) continue;
      const double e = std::abs(b.f(st.V) - st.U);
      if (e < err) {
        err = e;
        best = &b;
      }
    }
    if (!best) throw InputError("no nullcline branch contains the steady state");
    return *best;
  };
  FrontSetup s;
  s.model = std::move(model);
  s.branch_minus = find(minus);
  s.branch_plus = find(plus);
  s.minus = make_steady_state(*s.model, minus.U, minus.V, &s.branch_minus);
  s.plus = make_steady_state(*s.model, plus.U, plus.V, &s.branch_plus);
  return s;
}

// ---------------------------------------------------------------------------
// Layer front

double LayerFront::value(double x) const {
  if (x <= xi.front()) return u_minus + (u.front() - u_minus) * std::exp(rate_minus * (x - xi.front()));
  if (x >= xi.back()) return u_plus + (u.back() - u_plus) * std::exp(rate_plus * (x - xi.back()));
  const std::size_t j = std::min(xi.size() - 2, static_cast<std::size_t>((x - xi.front()) / h_));
  const double t = (x - xi[j]) / h_;
  return quintic(u[j], p[j], pp_[j], u[j + 1], p[j + 1], pp_[j + 1], h_, t).f;
}

double LayerFront::slope(double x) const {
  if (x <= xi.front()) return rate_minus * (value(x) - u_minus);
  if (x >= xi.back()) return rate_plus * (value(x) - u_plus);
  const std::size_t j = std::min(xi.size() - 2, static_cast<std::size_t>((x - xi.front()) / h_));
  const double t = (x - xi[j]) / h_;
  return quintic(u[j], p[j], pp_[j], u[j + 1], p[j + 1], pp_[j + 1], h_, t).d1;
}

double LayerFront::curvature(double x) const {
  if (x <= xi.front()) return rate_minus * rate_minus * (value(x) - u_minus);
  if (x >= xi.back()) return rate_plus * rate_plus * (value(x) - u_plus);
  const std::size_t j = std::min(xi.size() - 2, static_cast<std::size_t>((x - xi.front()) / h_));
  const double t = (x - xi[j]) / h_;
  return quintic(u[j], p[j], pp_[j], u[j + 1], p[j + 1], pp_[j + 1], h_, t).d2;
}

LayerFront solve_layer_front(const ReactionModel& model, double v_star,
                             const NullclineBranch& branch_minus,
                             const NullclineBranch& branch_plus, double c_guess) {
  using detail::Rkf78;
  using State = detail::Vec<4>;
  require_in_domain(branch_minus, v_star, "layer front");
  require_in_domain(branch_plus, v_star, "layer front");
  const double um = branch_minus.f(v_star), up = branch_plus.f(v_star);
  const Jacobian jm = model.partials(um, v_star), jp = model.partials(up, v_star);
  if (!(jm.Fu < 0) || !(jp.Fu < 0)) {
    std::ostringstream os;
    os << "layer end points are not saddles: F_u = " << jm.Fu << " at u- = " << um
       << ", F_u = " << jp.Fu << " at u+ = " << up;
    throw InputError(os.str());
  }
  const double D = std::abs(up - um);
  if (!(D > 0)) throw InputError("layer end points coincide");
  const double s = sgn(up - um);
  const double mid = 0.5 * (um + up);
  const double eps = 1e-9;

  double c = 0.0;
  auto rate_u = [&](double cc) { return 0.5 * (-cc + std::sqrt(cc * cc - 4.0 * jm.Fu)); };
  auto rate_s = [&](double cc) { return 0.5 * (-cc - std::sqrt(cc * cc - 4.0 * jp.Fu)); };

  // Forward from u- in xi, backward from u+ in sigma = -xi. Extra components
  // accumulate e^{c xi} F_v u' and e^{c xi} u'^2 (up to a constant factor).
  Rkf78<4> fwd(
      [&](const State& x, State& dx, double t) {
        const double w = std::exp(c * t);
        dx[0] = x[1];
        dx[1] = -c * x[1] - model.F(x[0], v_star);
        dx[2] = w * model.partials(x[0], v_star).Fv * x[1];
        dx[3] = w * x[1] * x[1];
      },
      1e-15, 1e-13);
  Rkf78<4> bwd(
      [&](const State& x, State& dx, double t) {
        const double w = std::exp(-c * t);
        dx[0] = -x[1];
        dx[1] = c * x[1] + model.F(x[0], v_star);
        dx[2] = w * model.partials(x[0], v_star).Fv * x[1];
        dx[3] = w * x[1] * x[1];
      },
      1e-15, 1e-13);

  struct Half {
    bool reached = false;
    State at_mid{};
    double t_mid = 0.0;
    detail::Trajectory<4> traj;
  };
  auto half = [&](double cc, bool forward, bool record) {
    c = cc;
    Rkf78<4>& ode = forward ? fwd : bwd;
    const double rate = forward ? rate_u(cc) : -rate_s(cc);
    const double d = forward ? s * eps * D : -s * eps * D;
    State x = forward ? State{um + d, rate_u(cc) * d, 0, 0} : State{up + d, rate_s(cc) * d, 0, 0};
    const double start = forward ? um : up, p_seed = std::abs(x[1]);
    Half h;
    double t = 0.0, dt = 0.1 / rate;
    const double dt_max = 0.25 / std::max({rate_u(cc), -rate_s(cc), std::abs(cc), 1e-6});
    const double t_max = 100.0 * std::log(1.0 / eps) / rate;
    if (record) {
      h.traj.t.push_back(t);
      h.traj.x.push_back(x);
    }
    while (t < t_max) {
      const State x0 = x;
      const double t0 = t;
      ode.step(x, t, dt, dt_max);
      if (!std::isfinite(x[0]) || !std::isfinite(x[1])) break;
      if (s * (x[0] - mid) * (forward ? 1 : -1) >= 0) {
        const double tau = ode.locate(x0, t0, t - t0, [&](const State& y) { return y[0] - mid; });
        h.reached = true;
        h.t_mid = t0 + tau;
        h.at_mid = ode.advance(x0, t0, tau);
        if (record) {
          h.traj.t.push_back(h.t_mid);
          h.traj.x.push_back(h.at_mid);
        }
        return h;
      }
      if (record) {
        h.traj.t.push_back(t);
        h.traj.x.push_back(x);
      }
      // Turned back, left the interval between the end states, or stalled.
      if (s * x[1] < 0 || s * (x[0] - um) < 0 || s * (x[0] - up) > 0) break;
      if (std::abs(x[0] - start) > 10.0 * eps * D && std::abs(x[1]) < 0.5 * p_seed) break;
    }
    return h;
  };
  // Mismatch of u' at the midpoint level; decreasing in c.
  auto mismatch = [&](double cc) {
    const Half f = half(cc, true, false);
    const Half b = half(cc, false, false);
    const double pf = f.reached ? f.at_mid[1] : 0.0;
    const double pb = b.reached ? b.at_mid[1] : 0.0;
    return s * (pf - pb);
  };

  const double speed_scale = std::sqrt(std::max(-jm.Fu, -jp.Fu)) * std::max(1.0, D);
  double c_lo = c_guess, c_hi = c_guess;
  const double f0 = mismatch(c_guess);
  if (f0 != 0.0) {
    double f_lo = f0, f_hi = f0;
    double step = 0.05 * speed_scale;
    bool found = false;
    for (int it = 0; it < 40 && !found; ++it, step *= 2.0) {
      for (double dir : {1.0, -1.0}) {
        const double cn = c_guess + dir * step;
        const double fn = mismatch(cn);
        if (sgn(fn) != sgn(f0)) {
          c_lo = std::min(c_guess, cn);
          c_hi = std::max(c_guess, cn);
          f_lo = c_lo == c_guess ? f0 : fn;
          f_hi = c_hi == c_guess ? f0 : fn;
          found = true;
          break;
        }
      }
    }
    if (!found) throw NumericalError("layer shooting: no sign change over the speed bracket");
    boost::uintmax_t iters = 200;
    const auto r = boost::math::tools::toms748_solve(
        mismatch, c_lo, c_hi, f_lo, f_hi,
        [](double x, double y) { return std::abs(y - x) <= 1e-15 * std::max(1.0, std::abs(x)); },
        iters);
    c_lo = r.first;
    c_hi = r.second;
  }
  const double c_star = 0.5 * (c_lo + c_hi);
  const Half F = half(c_star, true, true);
  const Half B = half(c_star, false, true);
  if (!F.reached || !B.reached) throw NumericalError("layer shooting: trajectory escaped");
  c = c_star;
  const double mu = rate_u(c_star), ms = rate_s(c_star);
  if (!(c_star + mu > 0) || !(c_star + ms < 0)) {
    std::ostringstream os;
    os << "weighted layer integrals diverge: c = " << c_star << ", rates " << mu << ", " << ms;
    throw NumericalError(os.str());
  }

  LayerFront L;
  L.v_star = v_star;
  L.c_star = c_star;
  L.u_minus = um;
  L.u_plus = up;
  L.rate_minus = mu;
  L.rate_plus = ms;

  // Centered frame: xi = t - tf on the forward half, xi = sb - sigma on the backward half.
  const double tf = F.t_mid, sb = B.t_mid;
  const double dm = F.traj.x.front()[0] - um, pm = F.traj.x.front()[1];
  const double dp = B.traj.x.front()[0] - up, pp = B.traj.x.front()[1];
  const double IF_left = F.at_mid[2] + jm.Fv * pm / (c_star + mu);
  const double IN_left = F.at_mid[3] + pm * pm / (c_star + 2 * mu);
  const double IF_right = B.at_mid[2] + jp.Fv * pp / -(c_star + ms);
  const double IN_right = B.at_mid[3] + pp * pp / -(c_star + 2 * ms);
  L.weighted_Fv = std::exp(-c_star * tf) * IF_left + std::exp(c_star * sb) * IF_right;
  L.weighted_N = std::exp(-c_star * tf) * IN_left + std::exp(c_star * sb) * IN_right;

  const double span = std::log(std::max(D, 1e-3) * 1e10);
  const double Lm = std::max(span / mu, tf), Lp = std::max(span / -ms, sb);
  const int n = 4001;
  L.h_ = (Lm + Lp) / (n - 1);
  L.xi.resize(n);
  L.u.resize(n);
  L.p.resize(n);
  L.pp_.resize(n);
  std::size_t kf = 0;
  for (int j = 0; j < n; ++j) {
    const double x = -Lm + j * L.h_;
    L.xi[j] = x;
    double uu, pv;
    if (x <= -tf) {
      uu = um + dm * std::exp(mu * (x + tf));
      pv = mu * (uu - um);
    } else if (x >= sb) {
      uu = up + dp * std::exp(ms * (x - sb));
      pv = ms * (uu - up);
    } else if (x <= 0) {
      const double t = x + tf;
      while (kf + 1 < F.traj.t.size() && F.traj.t[kf + 1] <= t) ++kf;
      const State y = fwd.advance(F.traj.x[kf], F.traj.t[kf], t - F.traj.t[kf]);
      uu = y[0];
      pv = y[1];
    } else {
      const double sg = sb - x;
      auto it = std::upper_bound(B.traj.t.begin(), B.traj.t.end(), sg);
      const std::size_t kb = static_cast<std::size_t>(it - B.traj.t.begin()) - 1;
      const State y = bwd.advance(B.traj.x[kb], B.traj.t[kb], sg - B.traj.t[kb]);
      uu = y[0];
      pv = y[1];
    }
    L.u[j] = uu;
    L.p[j] = pv;
    L.pp_[j] = -c_star * pv - model.F(uu, v_star);
  }
  return L;
}

WeightedIntegrals weighted_integrals(const LayerFront& layer, const ReactionModel& model) {
  WeightedIntegrals w;
  w.F_star = layer.weighted_Fv;
  w.N_star = layer.weighted_N;
  w.G_star = model.G(layer.u_plus, layer.v_star) - model.G(layer.u_minus, layer.v_star);
  if (!(w.N_star > 0) || !std::isfinite(w.F_star)) {
    throw NumericalError("weighted layer integrals are not finite/positive");
  }
  return w;
}

// ---------------------------------------------------------------------------
// Slow orbits

namespace {

double hermite3(double x0, double x1, double f0, double f1, double d0, double d1, double x) {
  const double h = x1 - x0, t = (x - x0) / h;
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * f0 + (t3 - 2 * t2 + t) * h * d0 + (-2 * t3 + 3 * t2) * f1 +
         (t3 - t2) * h * d1;
}

double piece_eval(const std::vector<double>& s, const std::vector<double>& f,
                  const std::vector<double>& df, double x) {
  auto it = std::upper_bound(s.begin(), s.end(), x);
  std::size_t j = it == s.begin() ? 0 : static_cast<std::size_t>(it - s.begin()) - 1;
  j = std::min(j, s.size() - 2);
  return hermite3(s[j], s[j + 1], f[j], f[j + 1], df[j], df[j + 1], x);
}

bool segments_cross(double ax, double ay, double bx, double by, double cx, double cy, double dx,
                    double dy, double& alpha, double& beta) {
  const double rx = bx - ax, ry = by - ay, sx = dx - cx, sy = dy - cy;
  const double den = rx * sy - ry * sx;
  if (den == 0.0) return false;
  alpha = ((cx - ax) * sy - (cy - ay) * sx) / den;
  beta = ((cx - ax) * ry - (cy - ay) * rx) / den;
  return alpha >= 0 && alpha <= 1 && beta >= 0 && beta <= 1;
}

}  // namespace

double SlowOrbits::v_at(double s) const {
  if (s <= 0) {
    if (s_minus.size() < 2 || s <= s_minus.front()) {
      const double s0 = s_minus.front();
      return V_minus + (v_minus.front() - V_minus) * std::exp(rate_minus * (s - s0));
    }
    return piece_eval(s_minus, v_minus, dv_minus, s);
  }
  if (s_plus.size() < 2) return v_plus.front();
  if (s >= s_plus.back()) {
    return V_plus + (v_plus.back() - V_plus) * std::exp(rate_plus * (s - s_plus.back()));
  }
  return piece_eval(s_plus, v_plus, dv_plus, s);
}

double SlowOrbits::q_at(double s) const {
  if (s <= 0) {
    if (s_minus.size() < 2 || s <= s_minus.front()) {
      return q_minus.front() * std::exp(rate_minus * (s - s_minus.front()));
    }
    return piece_eval(s_minus, q_minus, dq_minus, s);
  }
  if (s_plus.size() < 2) return q_plus.front();
  if (s >= s_plus.back()) return q_plus.back() * std::exp(rate_plus * (s - s_plus.back()));
  return piece_eval(s_plus, q_plus, dq_plus, s);
}

SlowOrbits reduced_slow_orbits(const FrontSetup& setup, const RegimeParams& regime,
                               const SlowOrbitOptions& opt) {
  using detail::Rkf78;
  using State = detail::Vec<5>;
  const ReactionModel& model = *setup.model;
  const NullclineBranch& bm = setup.branch_minus;
  const NullclineBranch& bp = setup.branch_plus;
  const double Vm = setup.minus.V, Vp = setup.plus.V;
  auto Gm = [&](double v) { return model.G(bm.f(v), v); };
  auto Gp = [&](double v) { return model.G(bp.f(v), v); };
  auto kappa = [&](const NullclineBranch& b, double v) {
    const Jacobian j = model.partials(b.f(v), v);
    return j.Gu * b.fprime(v) + j.Gv;
  };
  const double km = kappa(bm, Vm), kp = kappa(bp, Vp);
  if (!(km < 0) || !(kp < 0)) throw InputError("end states are not saddles of the reduced flow");

  SlowOrbits out;
  out.regime = regime.tag;
  out.V_minus = Vm;
  out.V_plus = Vp;

  if (regime.tag == Regime::Strong) {
    // v_eta = -G(f-(v), v) from v = V+ at eta = 0 back towards V-.
    out.a = 1.0;
    out.b = 0.0;
    const double lo = std::min(Vm, Vp), hi = std::max(Vm, Vp);
    if (!bm.domain.contains(lo) || !bm.domain.contains(hi)) {
      throw InputError("strong regime: [V+, V-] is not contained in the minus branch");
    }
    const double dir = sgn(Vp - Vm);
    for (int i = 0; i < 64; ++i) {
      const double v = Vm + (Vp - Vm) * (i + 0.5) / 64.0;
      if (!(-Gm(v) * dir > 0)) {
        std::ostringstream os;
        os << "strong regime: reduced flow on the minus branch does not carry V- to V+ (G = "
           << Gm(v) << " at v = " << v << ")";
        throw InputError(os.str());
      }
    }
    Rkf78<1> ode([&](const detail::Vec<1>& x, detail::Vec<1>& dx, double) { dx[0] = Gm(x[0]); },
                 opt.tolerance * 1e-2, opt.tolerance);
    // Backward in eta is forward in sigma = -eta with v_sigma = G.
    detail::Vec<1> x{Vp};
    double t = 0.0, dt = 1e-3;
    std::vector<double> s{0.0}, v{Vp};
    const double stop = 1e-10 * std::max(1.0, std::abs(Vm));
    const double dt_max = 0.05 / -km;
    while (std::abs(x[0] - Vm) > stop) {
      ode.step(x, t, dt, dt_max);
      s.push_back(-t);
      v.push_back(x[0]);
      if (t > 1e4 / -km) throw NumericalError("strong-regime slow orbit does not reach V-");
    }
    std::reverse(s.begin(), s.end());
    std::reverse(v.begin(), v.end());
    out.s_minus = s;
    out.v_minus = v;
    for (double vv : v) {
      out.q_minus.push_back(-Gm(vv));
      out.dv_minus.push_back(-Gm(vv));
      out.dq_minus.push_back(-kappa(bm, vv) * -Gm(vv));
    }
    out.s_plus = {0.0};
    out.v_plus = {Vp};
    out.q_plus = {0.0};
    out.dv_plus = {0.0};
    out.dq_plus = {0.0};
    out.rate_minus = -km;
    out.rate_plus = 0.0;
    out.v_star = Vp;
    out.q_star = -Gm(Vp);
    out.transversality = 1.0;
    out.weighted_minus = out.weighted_plus = kNaN;
    out.G1_minus = out.G2_minus = kNaN;
    return out;
  }

  double a, b;
  if (regime.tag == Regime::Weak) {
    a = 1.0;
    b = regime.rbar;
  } else {
    a = regime.deltabar * regime.deltabar;
    b = 1.0;
  }
  out.a = a;
  out.b = b;
  const double mu_m = 0.5 * (-b + std::sqrt(b * b - 4 * a * km));
  const double ms_p = 0.5 * (-b - std::sqrt(b * b - 4 * a * kp));
  out.rate_minus = mu_m;
  out.rate_plus = ms_p;
  if (!(b + 2 * ms_p < 0)) {
    std::ostringstream os;
    os << "slow integral diverges: weight rate " << b << " vs decay rate " << ms_p;
    throw NumericalError(os.str());
  }

  const double span = std::abs(Vm - Vp);
  const double v_lo = std::min(Vm, Vp) - span, v_hi = std::max(Vm, Vp) + span;

  // Forward along L^u_-; components 2..4 hold e^{-b t} times integrals weighted by e^{b t}.
  Rkf78<5> fwd(
      [&](const State& x, State& dx, double) {
        const double g = Gm(x[0]);
        dx[0] = a * x[1];
        dx[1] = -b * x[1] - g;
        dx[2] = a * a * x[1] * x[1] - b * x[2];
        dx[3] = g - b * x[3];
        dx[4] = g * g - b * x[4];
      },
      opt.tolerance * 1e-2, opt.tolerance);
  // Backward along L^s_+ in sigma = -t; integral weighted by e^{-b sigma}.
  Rkf78<5> bwd(
      [&](const State& x, State& dx, double sg) {
        const double g = Gp(x[0]);
        dx[0] = -a * x[1];
        dx[1] = b * x[1] + g;
        dx[2] = std::exp(-b * sg) * a * a * x[1] * x[1];
        dx[3] = 0.0;
        dx[4] = 0.0;
      },
      opt.tolerance * 1e-2, opt.tolerance);

  auto seed = [&](double V, double m, double dir) {
    double dv = 1.0, dq = m / a;
    const double nrm = std::hypot(dv, dq);
    dv *= dir * opt.seed_distance / nrm;
    dq *= dir * opt.seed_distance / nrm;
    return State{V + dv, dq, 0.0, 0.0, 0.0};
  };
  const State xm0 = seed(Vm, mu_m, sgn(Vp - Vm));
  const State xp0 = seed(Vp, ms_p, sgn(Vm - Vp));

  auto run = [&](Rkf78<5>& ode, State x, const NullclineBranch& br, double rate, double q_bound) {
    detail::Trajectory<5> tr;
    double t = 0.0, dt = 1e-3 / std::max(rate, 1e-12);
    const double t_max = 200.0 / rate + 100.0;
    const double dt_max = 0.1 / std::max(rate, 1e-3);
    tr.t.push_back(t);
    tr.x.push_back(x);
    while (t < t_max) {
      ode.step(x, t, dt, dt_max);
      tr.t.push_back(t);
      tr.x.push_back(x);
      if (!br.domain.contains(x[0]) || x[0] < v_lo || x[0] > v_hi) break;
      if (std::abs(x[1]) > q_bound || !std::isfinite(x[1])) break;
    }
    return tr;
  };
  const auto Tm = run(fwd, xm0, bm, mu_m, 1e12);
  double qmax = 0.0;
  for (const auto& x : Tm.x) qmax = std::max(qmax, std::abs(x[1]));
  const double q_bound = 10.0 * qmax + 1.0;
  const auto Tp = run(bwd, xp0, bp, -ms_p, q_bound);

  // First crossing of the two polylines in the (v, q) plane.
  std::size_t ci = 0, cj = 0;
  double ca = 0, cb = 0;
  bool hit = false;
  for (std::size_t i = 0; i + 1 < Tm.x.size() && !hit; ++i) {
    for (std::size_t j = 0; j + 1 < Tp.x.size(); ++j) {
      double al, be;
      if (segments_cross(Tm.x[i][0], Tm.x[i][1], Tm.x[i + 1][0], Tm.x[i + 1][1], Tp.x[j][0],
                         Tp.x[j][1], Tp.x[j + 1][0], Tp.x[j + 1][1], al, be)) {
        ci = i;
        cj = j;
        ca = al;
        cb = be;
        hit = true;
        break;
      }
    }
  }
  if (!hit) throw NumericalError("slow manifolds L^u_- and L^s_+ do not intersect");

  // Newton refinement in the two time parameters.
  double tau1 = ca * (Tm.t[ci + 1] - Tm.t[ci]);
  double tau2 = cb * (Tp.t[cj + 1] - Tp.t[cj]);
  State P{}, Q{};
  const double scale = span + qmax;
  for (int it = 0; it < 50; ++it) {
    P = fwd.advance(Tm.x[ci], Tm.t[ci], tau1);
    Q = bwd.advance(Tp.x[cj], Tp.t[cj], tau2);
    const State fP = fwd.derivative(P, Tm.t[ci] + tau1);
    const State gQ = bwd.derivative(Q, Tp.t[cj] + tau2);
    const double r0 = Q[0] - P[0], r1 = Q[1] - P[1];
    if (std::hypot(r0, r1) < 1e-14 * scale) break;
    const double det = fP[0] * -gQ[1] - fP[1] * -gQ[0];
    if (det == 0.0) break;
    tau1 += (r0 * -gQ[1] - r1 * -gQ[0]) / det;
    tau2 += (fP[0] * r1 - fP[1] * r0) / det;
  }
  {
    const State fP = fwd.derivative(P, Tm.t[ci] + tau1);
    const State gQ = bwd.derivative(Q, Tp.t[cj] + tau2);
    const double cr = std::abs(fP[0] * gQ[1] - fP[1] * gQ[0]);
    out.transversality = cr / (std::hypot(fP[0], fP[1]) * std::hypot(gQ[0], gQ[1]));
    if (std::hypot(Q[0] - P[0], Q[1] - P[1]) > 1e-9 * scale) {
      throw NumericalError("slow manifold intersection did not converge");
    }
    if (out.transversality < opt.transversality_margin) {
      std::ostringstream os;
      os << "tangential intersection of the slow manifolds (sin angle " << out.transversality
         << ")";
      throw NumericalError(os.str());
    }
  }
  const double t1 = Tm.t[ci] + tau1;
  const double t2 = Tp.t[cj] + tau2;
  out.v_star = 0.5 * (P[0] + Q[0]);
  out.q_star = 0.5 * (P[1] + Q[1]);

  auto push = [&](std::vector<double>& s, std::vector<double>& v, std::vector<double>& q,
                  std::vector<double>& dv, std::vector<double>& dq, double ss, double vv,
                  double qq, bool minus) {
    s.push_back(ss);
    v.push_back(vv);
    q.push_back(qq);
    dv.push_back(a * qq);
    dq.push_back(-b * qq - (minus ? Gm(vv) : Gp(vv)));
  };
  for (std::size_t i = 0; i <= ci; ++i) {
    if (Tm.t[i] >= t1) break;
    push(out.s_minus, out.v_minus, out.q_minus, out.dv_minus, out.dq_minus, Tm.t[i] - t1,
         Tm.x[i][0], Tm.x[i][1], true);
  }
  push(out.s_minus, out.v_minus, out.q_minus, out.dv_minus, out.dq_minus, 0.0, out.v_star,
       out.q_star, true);
  push(out.s_plus, out.v_plus, out.q_plus, out.dv_plus, out.dq_plus, 0.0, out.v_star, out.q_star,
       false);
  for (std::size_t j = cj + 1; j-- > 0;) {
    if (Tp.t[j] >= t2) continue;
    push(out.s_plus, out.v_plus, out.q_plus, out.dv_plus, out.dq_plus, t2 - Tp.t[j], Tp.x[j][0],
         Tp.x[j][1], false);
  }

  // Integrals with analytic tails beyond the seeds.
  const double dvm = xm0[0] - Vm, qm = xm0[1];
  const double decay = std::exp(-b * t1);
  out.weighted_minus = P[2] + decay * a * a * qm * qm / (b + 2 * mu_m);
  out.G1_minus = P[3] + decay * km * dvm / (b + mu_m);
  out.G2_minus = P[4] + decay * km * km * dvm * dvm / (b + 2 * mu_m);
  const double qp = xp0[1];
  out.weighted_plus = std::exp(b * t2) * (Q[2] + a * a * qp * qp / -(b + 2 * ms_p));
  return out;
}

std::vector<double> strong_q_profile(const LayerFront& layer, const ReactionModel& model,
                                     double r, const std::vector<double>& xi) {
  if (!(r > 0)) throw InputError("strong q profile requires r > 0");
  if (!std::is_sorted(xi.begin(), xi.end())) throw InputError("xi must be ascending");
  using detail::Rkf78;
  const double v = layer.v_star;
  auto g = [&](double x) { return model.G(layer.value(x), v); };
  Rkf78<1> ode([&](const detail::Vec<1>& y, detail::Vec<1>& dy,
                   double x) { dy[0] = -r * (y[0] + g(x)); },
               1e-14, 1e-13);
  std::vector<double> out(xi.size());
  // Start where u* equals its left limit to working precision.
  double x0 = std::min(layer.xi.front(), xi.empty() ? 0.0 : xi.front());
  detail::Vec<1> y{-model.G(layer.u_minus, v)};
  y[0] = -g(x0);
  double t = x0, dt = 0.1 / std::max(r, 1.0);
  const double dt_max = std::min(0.5, 2.0 / r);
  for (std::size_t k = 0; k < xi.size(); ++k) {
    while (t < xi[k]) {
      double prev_t = t;
      detail::Vec<1> prev = y;
      ode.step(y, t, dt, std::min(dt_max, xi[k] - t));
      if (t > xi[k]) {
        y = ode.advance(prev, prev_t, xi[k] - prev_t);
        t = xi[k];
      }
    }
    out[k] = y[0];
  }
  return out;
}

AsymptoticStabilityReport asymptotic_lambda2(const FrontSetup& setup, const RegimeParams& regime,
                                             const LayerFront& layer, const SlowOrbits& slow) {
  if (slow.regime != regime.tag) throw InputError("slow orbits computed for another regime");
  if (std::abs(layer.v_star - slow.v_star) > 1e-8 * (1.0 + std::abs(slow.v_star))) {
    throw InputError("layer jump level differs from the slow-orbit intersection");
  }
  const ReactionModel& model = *setup.model;
  const WeightedIntegrals w = weighted_integrals(layer, model);
  AsymptoticStabilityReport rep;
  rep.regime = regime;
  rep.v_star = layer.v_star;
  rep.c_star = layer.c_star;
  rep.F_star = w.F_star;
  rep.G_star = w.G_star;
  rep.N_star = w.N_star;
  rep.error_bound = kNaN;
  const double ratio = w.F_star / w.G_star;

  const double Vp = setup.plus.V;
  const double Gjump = model.G(setup.branch_minus.f(Vp), Vp);
  rep.M_G_limit = -ratio * Gjump / w.N_star;
  rep.M_G2_limit = -ratio * Gjump * Gjump / w.N_star;
  rep.M_full_limit = 2.0 * rep.M_G2_limit;
  rep.M_G = rep.M_G2 = rep.M_full = kNaN;
  rep.S = kNaN;

  switch (regime.tag) {
    case Regime::Weak:
      rep.S = slow.weighted_minus + slow.weighted_plus;
      rep.lambda2 = -(1.0 / regime.delta) * ratio * rep.S / w.N_star;
      break;
    case Regime::Intermediate: {
      rep.S = slow.weighted_minus + slow.weighted_plus;
      const double db2 = regime.deltabar * regime.deltabar;
      rep.lambda2 = -1.0 - ratio * rep.S / (db2 * regime.r * w.N_star);
      rep.M_G = -ratio * slow.G1_minus / w.N_star;
      rep.M_G2 = -ratio * slow.G2_minus / w.N_star;
      rep.M_full = -ratio * rep.S / (db2 * db2 * w.N_star);
      break;
    }
    case Regime::Strong:
      rep.lambda2 = -1.0;
      rep.error_bound = regime.eps / regime.r;
      break;
  }
  rep.criterion_sign = rep.lambda2 > 0 ? 1 : (rep.lambda2 < 0 ? -1 : 0);
  auto nu_crit = [&](double M) {
    return M > 0 ? std::cbrt(M) * std::pow(regime.delta, -4.0 / 3.0) : kNaN;
  };
  rep.nu_crit_G = nu_crit(rep.M_G_limit);
  rep.nu_crit_G2 = nu_crit(rep.M_G2_limit);
  rep.nu_crit_full = nu_crit(rep.M_full_limit);
  return rep;
}

SingularSkeleton singular_skeleton(const FrontSetup& setup, double delta, double nu,
                                   const RegimeThresholds& th) {
  SingularSkeleton sk;
  sk.regime = classify_regime(delta, nu, th);
  sk.slow = reduced_slow_orbits(setup, sk.regime);
  sk.layer = solve_layer_front(*setup.model, sk.slow.v_star, setup.branch_minus,
                               setup.branch_plus);
  sk.report = asymptotic_lambda2(setup, sk.regime, sk.layer, sk.slow);
  // Limit coefficients use the layer at v* = V+.
  const LayerFront lim = sk.regime.tag == Regime::Strong
                             ? sk.layer
                             : solve_layer_front(*setup.model, setup.plus.V, setup.branch_minus,
                                                 setup.branch_plus, sk.layer.c_star);
  const WeightedIntegrals w = weighted_integrals(lim, *setup.model);
  const double Vp = setup.plus.V;
  const double Gj = setup.model->G(setup.branch_minus.f(Vp), Vp);
  auto& r = sk.report;
  r.M_G_limit = -(w.F_star / w.G_star) * Gj / w.N_star;
  r.M_G2_limit = -(w.F_star / w.G_star) * Gj * Gj / w.N_star;
  r.M_full_limit = 2.0 * r.M_G2_limit;
  auto nu_crit = [&](double M) {
    return M > 0 ? std::cbrt(M) * std::pow(delta, -4.0 / 3.0) : kNaN;
  };
  r.nu_crit_G = nu_crit(r.M_G_limit);
  r.nu_crit_G2 = nu_crit(r.M_G2_limit);
  r.nu_crit_full = nu_crit(r.M_full_limit);
  return sk;
}

}  // namespace advfront
