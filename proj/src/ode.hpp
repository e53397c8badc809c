#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "advfront/kinetics.hpp"

namespace advfront::detail {

template <std::size_t N>
using Vec = std::array<double, N>;

/// Adaptive RKF78 driver with step recording and event location by step bisection.
template <std::size_t N>
class Rkf78 {
 public:
  using State = Vec<N>;
  using Rhs = std::function<void(const State&, State&, double)>;

  Rkf78(Rhs rhs, double abs_tol, double rel_tol)
      : rhs_(std::move(rhs)),
        controlled_(boost::numeric::odeint::make_controlled(
            abs_tol, rel_tol, boost::numeric::odeint::runge_kutta_fehlberg78<State>())) {}

  /// One accepted adaptive step; dt is updated to the suggested next step.
  void step(State& x, double& t, double& dt, double dt_max) {
    using boost::numeric::odeint::fail;
    auto sys = [this](const State& y, State& dy, double s) { rhs_(y, dy, s); };
    for (int tries = 0; tries < 200; ++tries) {
      dt = std::copysign(std::min(std::abs(dt), dt_max), dt);
      if (controlled_.try_step(sys, x, t, dt) != fail) return;
    }
    throw NumericalError("adaptive integrator could not take a step");
  }

  /// Plain RKF78 step of size h from (x, t); used for dense output and events.
  State advance(const State& x, double t, double h) const {
    if (h == 0.0) return x;
    State y = x;
    auto sys = [this](const State& z, State& dz, double s) { rhs_(z, dz, s); };
    // Sub-step so that long advances stay within the accuracy of the adaptive steps.
    const int n = std::max(1, static_cast<int>(std::ceil(std::abs(h) / max_plain_)));
    const double hh = h / n;
    for (int i = 0; i < n; ++i) plain_.do_step(sys, y, t + i * hh, hh);
    return y;
  }

  State derivative(const State& x, double t) const {
    State d{};
    rhs_(x, d, t);
    return d;
  }

  /// Limits the size of single plain steps used by advance().
  void set_max_plain_step(double h) { max_plain_ = h; }

  /// Locates g(x(t)) = 0 inside an accepted step starting at (x0, t0) of size h,
  /// given that g changes sign over the step. Returns the step fraction tau.
  template <typename Gfn>
  double locate(const State& x0, double t0, double h, Gfn&& g) const {
    double a = 0.0, b = h;
    const double ga = g(x0);
    for (int it = 0; it < 200 && std::abs(b - a) > 1e-15 * (1.0 + std::abs(t0) + std::abs(h));
         ++it) {
      const double m = 0.5 * (a + b);
      const double gm = g(advance(x0, t0, m));
      if ((gm > 0) == (ga > 0)) {
        a = m;
      } else {
        b = m;
      }
    }
    return 0.5 * (a + b);
  }

 private:
  Rhs rhs_;
  boost::numeric::odeint::controlled_runge_kutta<
      boost::numeric::odeint::runge_kutta_fehlberg78<State>>
      controlled_;
  mutable boost::numeric::odeint::runge_kutta_fehlberg78<State> plain_;
  double max_plain_ = 1e300;
};

/// Trajectory samples at accepted steps.
template <std::size_t N>
struct Trajectory {
  std::vector<double> t;
  std::vector<Vec<N>> x;
};

}  // namespace advfront::detail
