#pragma once

#include <string>
#include <vector>

#include "advfront/kinetics.hpp"

namespace advfront {

enum class Regime { Weak, Intermediate, Strong };
std::string to_string(Regime r);

struct RegimeThresholds {
  double r0 = 0.05;
  double delta0 = 0.02;
  double rbar0 = 2.0;
  double deltabar0 = 2.0;
};

/// Scalings of (delta, nu): r = delta^2 nu, eps = 1/nu, rbar = r/delta, deltabar = delta/r.
struct RegimeParams {
  double delta = 0.0;
  double nu = 0.0;
  double r = 0.0;
  double eps = 0.0;
  double rbar = 0.0;
  double deltabar = 0.0;
  RegimeThresholds thresholds;
  Regime tag = Regime::Weak;
};

/// Weak iff nu <= 1/delta, Strong iff nu >= r0/delta^2, Intermediate otherwise.
RegimeParams classify_regime(double delta, double nu, const RegimeThresholds& th = {});

/// The two end states of a front and the nullcline branches containing them.
/// "minus" is the state at xi -> -infinity.
struct FrontSetup {
  ModelPtr model;
  SteadyState minus, plus;
  NullclineBranch branch_minus, branch_plus;
};

enum class Orientation { DesertLeft, DesertRight };

/// Klausmeier front between the desert state (0, mu3) on S- and (U2, V2) on S+.
FrontSetup klausmeier_setup(std::shared_ptr<const KlausmeierModel> model,
                            Orientation orientation = Orientation::DesertLeft);

/// Generic setup from two states; branches are looked up through the model's
/// nullcline branches over the given window.
FrontSetup make_front_setup(ModelPtr model, const SteadyState& minus, const SteadyState& plus,
                            const SteadyStateSearch& window);

/// Fast heteroclinic u'' + c u' + F(u, v*) = 0 from f-(v*) to f+(v*), centered
/// so that u(0) is the midpoint of the end values. Stored on a uniform grid
/// with exponential tails outside it.
struct LayerFront {
  double v_star = 0.0;
  double c_star = 0.0;
  double u_minus = 0.0, u_plus = 0.0;
  /// Linear rates of u - u_minus (positive) and u - u_plus (negative).
  double rate_minus = 0.0, rate_plus = 0.0;
  std::vector<double> xi, u, p;
  /// int e^{c xi} F_v(u, v*) u' and int e^{c xi} u'^2 including tails.
  double weighted_Fv = 0.0, weighted_N = 0.0;

  double value(double x) const;
  double slope(double x) const;
  double curvature(double x) const;

 private:
  friend LayerFront solve_layer_front(const ReactionModel&, double, const NullclineBranch&,
                                      const NullclineBranch&, double);
  double h_ = 0.0;
  std::vector<double> pp_;  // u'' at the nodes
};

LayerFront solve_layer_front(const ReactionModel& model, double v_star,
                             const NullclineBranch& branch_minus,
                             const NullclineBranch& branch_plus, double c_guess = 0.0);

struct WeightedIntegrals {
  double F_star = 0.0;
  double G_star = 0.0;
  double N_star = 0.0;
};

WeightedIntegrals weighted_integrals(const LayerFront& layer, const ReactionModel& model);

/// Slow pieces of the singular front in the regime's slow coordinate s
/// (zeta = delta xi, tau = r xi or eta = eps xi). The planar flow is
///   v_s = a q,  q_s = -b q - G(f(v), v)
/// with (a, b) = (1, rbar) when weak and (deltabar^2, 1) when intermediate.
/// In the strong regime v_s = q = -G(f-(v), v) and the plus piece is constant.
struct SlowOrbits {
  Regime regime = Regime::Weak;
  double a = 1.0, b = 0.0;
  double v_star = 0.0, q_star = 0.0;
  double V_minus = 0.0, V_plus = 0.0;
  /// Minus piece on s <= 0 (ascending, ends at 0), plus piece on s >= 0, with
  /// s-derivatives of v and q at the samples.
  std::vector<double> s_minus, v_minus, q_minus, dv_minus, dq_minus;
  std::vector<double> s_plus, v_plus, q_plus, dv_plus, dq_plus;
  /// Exponential rates of the tails beyond the stored samples.
  double rate_minus = 0.0, rate_plus = 0.0;
  /// |sin| of the intersection angle (1 in the strong regime).
  double transversality = 1.0;
  /// int e^{b s} (v_s)^2 over each piece, tails included.
  double weighted_minus = 0.0, weighted_plus = 0.0;
  /// int_{-inf}^0 e^{b s} G(f-(v), v)^k ds for k = 1, 2 along the minus piece.
  double G1_minus = 0.0, G2_minus = 0.0;

  /// v at slow coordinate s (cubic Hermite between samples, linear tails).
  double v_at(double s) const;
  double q_at(double s) const;
};

struct SlowOrbitOptions {
  double seed_distance = 1e-7;
  double transversality_margin = 1e-6;
  double tolerance = 1e-12;
};

SlowOrbits reduced_slow_orbits(const FrontSetup& setup, const RegimeParams& regime,
                               const SlowOrbitOptions& opt = {});

/// q-tilde(xi) = -r int_{-inf}^xi e^{-r(xi - s)} G(u*(s), v*) ds on the given points.
std::vector<double> strong_q_profile(const LayerFront& layer, const ReactionModel& model,
                                     double r, const std::vector<double>& xi);

struct AsymptoticStabilityReport {
  RegimeParams regime;
  double v_star = 0.0, c_star = 0.0;
  double F_star = 0.0, G_star = 0.0, N_star = 0.0;
  /// Weak: S(rbar). Intermediate: int e^tau (v_tau)^2 over both pieces.
  double S = 0.0;
  double lambda2 = 0.0;
  /// Strong regime bound eps/r on the correction; NaN otherwise.
  double error_bound = 0.0;
  int criterion_sign = 0;
  /// Intermediate coefficient M with the inner slow integral taken as
  /// G (unsquared), G^2, and the full two-sided slow integral over deltabar^4.
  double M_G = 0.0, M_G2 = 0.0, M_full = 0.0;
  /// Same in the deltabar -> 0 limit (inner integrals evaluated at v* = V+).
  double M_G_limit = 0.0, M_G2_limit = 0.0, M_full_limit = 0.0;
  /// M^{1/3} delta^{-4/3} for each limit variant (NaN when M <= 0).
  double nu_crit_G = 0.0, nu_crit_G2 = 0.0, nu_crit_full = 0.0;
};

AsymptoticStabilityReport asymptotic_lambda2(const FrontSetup& setup, const RegimeParams& regime,
                                             const LayerFront& layer, const SlowOrbits& slow);

/// Complete singular-limit pipeline at (delta, nu): regime, slow orbits, layer
/// and leading-order report (including the deltabar -> 0 coefficients M).
struct SingularSkeleton {
  RegimeParams regime;
  SlowOrbits slow;
  LayerFront layer;
  AsymptoticStabilityReport report;
};

SingularSkeleton singular_skeleton(const FrontSetup& setup, double delta, double nu,
                                   const RegimeThresholds& th = {});

}  // namespace advfront
