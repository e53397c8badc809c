#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace advfront {

/// Raised for invalid arguments to model evaluators or solvers.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an iterative or integration routine fails to deliver a result.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ReactionValues {
  double F = 0.0;
  double G = 0.0;
};

struct Jacobian {
  double Fu = 0.0;
  double Fv = 0.0;
  double Gu = 0.0;
  double Gv = 0.0;

  double det() const { return Fu * Gv - Fv * Gu; }
  double trace() const { return Fu + Gv; }
};

/// Closed interval [lo, hi] of the slow variable with flags marking fold endpoints.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool lo_is_fold = false;
  bool hi_is_fold = false;

  bool contains(double v) const { return v >= lo && v <= hi; }
};

/// A branch u = f(v) of the nullcline F(u, v) = 0.
struct NullclineBranch {
  std::string label;
  Interval domain;
  std::function<double(double)> f;
  std::function<double(double)> fprime;
};

/// Two-component kinetics F(u, v), G(u, v) with parameter vector mu.
///
/// Implementations must be pure functions of (u, v, mu). Analytic partials are
/// expected for spectral work; the base class supplies a centered
/// finite-difference fallback (step 1e-6 * max(1, |x|)).
class ReactionModel {
 public:
  virtual ~ReactionModel() = default;

  virtual std::string name() const = 0;
  virtual std::vector<double> params() const = 0;

  virtual double F(double u, double v) const = 0;
  virtual double G(double u, double v) const = 0;
  virtual Jacobian partials(double u, double v) const;
  virtual bool has_analytic_partials() const { return false; }

  /// Nullcline branches on the window [v_lo, v_hi]. The generic version traces
  /// roots of F(., v) on [u_lo, u_hi] numerically.
  virtual std::vector<NullclineBranch> nullcline_branches(double v_lo, double v_hi,
                                                          double u_lo, double u_hi) const;

  Jacobian finite_difference_partials(double u, double v) const;
};

using ModelPtr = std::shared_ptr<const ReactionModel>;

/// Modified Klausmeier kinetics:
///   F = -mu1 U + U^2 V (1 - mu2 U),  G = mu3 - V - U^2 V.
class KlausmeierModel final : public ReactionModel {
 public:
  KlausmeierModel(double mu1, double mu2, double mu3);

  std::string name() const override { return "klausmeier"; }
  std::vector<double> params() const override { return {mu1_, mu2_, mu3_}; }

  double F(double u, double v) const override;
  double G(double u, double v) const override;
  Jacobian partials(double u, double v) const override;
  bool has_analytic_partials() const override { return true; }

  std::vector<NullclineBranch> nullcline_branches(double v_lo, double v_hi, double u_lo,
                                                  double u_hi) const override;

  double mu1() const { return mu1_; }
  double mu2() const { return mu2_; }
  double mu3() const { return mu3_; }

  /// Fold of the vegetated branches, V = 4 mu1 mu2.
  double fold_v() const { return 4.0 * mu1_ * mu2_; }
  /// U_F^{+}(V) (sign = +1) or U_F^{-}(V) (sign = -1); requires V >= fold_v().
  double branch_u(double v, int sign) const;
  double branch_du(double v, int sign) const;

  /// mu3/mu1 > 2(mu2 + sqrt(1 + mu2^2)): vegetated states exist.
  bool has_vegetated_states() const;
  /// mu3/mu1 > 4 mu2 + 1/mu2: (U2, V2) is PDE stable.
  bool upper_state_pde_stable() const;

 private:
  double mu1_, mu2_, mu3_;
};

/// Kinetics assembled from callables; used for generic-model tests and scripting.
class FunctionModel final : public ReactionModel {
 public:
  using Fn = std::function<double(double, double)>;
  using JacFn = std::function<Jacobian(double, double)>;

  FunctionModel(std::string name, std::vector<double> params, Fn f, Fn g,
                std::optional<JacFn> jac = std::nullopt);

  std::string name() const override { return name_; }
  std::vector<double> params() const override { return params_; }
  double F(double u, double v) const override { return f_(u, v); }
  double G(double u, double v) const override { return g_(u, v); }
  Jacobian partials(double u, double v) const override;
  bool has_analytic_partials() const override { return jac_.has_value(); }

 private:
  std::string name_;
  std::vector<double> params_;
  Fn f_, g_;
  std::optional<JacFn> jac_;
};

ReactionValues eval_reaction(const ReactionModel& model, double u, double v);

struct SteadyState {
  double U = 0.0;
  double V = 0.0;
  std::string branch;
  Jacobian jac;
  /// Reduced-flow rate G_u f'(V) + G_v on the containing branch (NaN if the
  /// branch derivative is unavailable, e.g. at a fold).
  double kappa = 0.0;
  bool bistable_admissible = false;
};

struct SteadyStateSearch {
  double u_lo = 0.0, u_hi = 10.0;
  double v_lo = 0.0, v_hi = 10.0;
  int seeds_per_axis = 25;
  double dedup_distance = 1e-8;
};

struct SteadyStateResult {
  std::vector<SteadyState> states;
  /// Set when only the trivial state exists (Klausmeier below the saddle-node).
  std::optional<std::string> note;
};

/// Roots of F = G = 0 with Jacobian data. Klausmeier uses the closed forms;
/// other models use Newton from a seed grid over the search window.
SteadyStateResult find_steady_states(const ReactionModel& model,
                                     const SteadyStateSearch& search = {});

/// Bistable admissibility: F_u < 0, G_v < 0 and F_u G_v - F_v G_u > 0.
bool bistable_admissible(const Jacobian& j);

/// Fills jac, kappa and the admissibility flag for (U, V) on the given branch.
SteadyState make_steady_state(const ReactionModel& model, double U, double V,
                              const NullclineBranch* branch);

/// Builds a model by registry name ("klausmeier").
ModelPtr make_model(const std::string& name, const std::vector<double>& mu);

}  // namespace advfront
