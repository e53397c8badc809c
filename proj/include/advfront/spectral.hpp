#pragma once

#include <Eigen/Sparse>
#include <optional>
#include <vector>

#include "advfront/front_solver.hpp"

namespace advfront {

/// Linearization about a front at transverse wavenumber ell, restricted to the
/// interior nodes (zero Dirichlet data at both ends). Unknowns are interleaved
/// (u_1, v_1, u_2, v_2, ...); the v rows are multiplied by delta^2 so that the
/// eigenproblem reads A(ell) x = lambda B x with B = diag(1, delta^2).
struct LinearOperator {
  Eigen::SparseMatrix<double> A;
  Eigen::VectorXd B;
  std::size_t interior = 0;  // number of interior nodes
};

LinearOperator assemble_operator(const ReactionModel& model, const FrontProfile& front,
                                 double ell);

struct SpectralOptions {
  /// 0 selects 1e-2 min(1, delta sqrt(nu) + delta).
  double ell0 = 0.0;
  int max_iterations = 60;
  double eigen_tolerance = 1e-13;
  double simplicity_gap = 1e-6;
  int ell_points = 3;
  /// The oracle halves ell0 until consecutive estimates agree to
  /// window_rtol |lambda2| + window_atol (window_rtol = 0 accepts the first window).
  double window_rtol = 1e-3;
  double window_atol = 1e-4;
  int max_halvings = 10;
};

/// Kernel eigenfunction of the adjoint linearization, obtained as the left null
/// vector of the discretized operator and scaled by the quadrature weights.
/// Normalized so that int (u_h' uA + v_h' vA) = 1.
struct AdjointSolution {
  std::vector<double> uA, vA;
  /// Right kernel vector (discrete analog of (u_h', v_h')) with the same normalization.
  std::vector<double> phi_u, phi_v;
  /// Eigenvalue of the discrete pencil closest to zero.
  double eigenvalue = 0.0;
  /// Max-norm residual of the discrete left eigenproblem over the max norm of psi.
  double residual = 0.0;
  /// Residual of the continuous adjoint equations applied to (uA, vA), relative.
  double continuous_residual = 0.0;
  /// Magnitude estimate of the next eigenvalue (simplicity check).
  double next_eigenvalue = 0.0;
  /// |psi . B phi| / (|psi| |B phi|) before normalization.
  double overlap = 0.0;
};

AdjointSolution solve_adjoint(const ReactionModel& model, const FrontProfile& front,
                              const SpectralOptions& opt = {});

/// Fredholm quotient -int(u_h' uA + v_h' vA / delta^2) / int(u_h' uA + v_h' vA)
/// with (u_h', v_h') differentiated on the front mesh.
double lambda_c2_exact(const FrontProfile& front, const AdjointSolution& adj);

/// Same quotient with the discrete kernel vector in place of (u_h', v_h').
double lambda_c2_discrete(const FrontProfile& front, const AdjointSolution& adj);

struct CriticalEigenvalue {
  double ell = 0.0;
  double lambda = 0.0;
  int iterations = 0;
  Eigen::VectorXd vector;
};

/// Eigenvalue of A(ell) x = lambda B x nearest to the shift by inverse iteration
/// started from x0 (the ell = 0 kernel when empty).
CriticalEigenvalue critical_eigenvalue(const ReactionModel& model, const FrontProfile& front,
                                       double ell, double shift,
                                       const Eigen::VectorXd& x0 = {},
                                       const SpectralOptions& opt = {});

struct OracleFit {
  double lambda2 = 0.0;
  double quartic = 0.0;
  double lambda0 = 0.0;
  double ell0 = 0.0;
  double fit_residual = 0.0;
  std::vector<double> ells, lambdas;
};

/// lambda_c(ell) - lambda_c(0) = a ell^2 + b ell^4 fitted over ell = k ell0,
/// k = 1..ell_points, by direct eigenvalue computation. The window is halved
/// until the estimate settles; the returned fit is the last window.
OracleFit lambda_c2_oracle(const ReactionModel& model, const FrontProfile& front,
                           const SpectralOptions& opt = {});

struct StabilityReport {
  double delta = 0.0, nu = 0.0, c = 0.0;
  Regime regime = Regime::Weak;
  double lambda2_exact = 0.0;
  double lambda2_discrete = 0.0;
  std::optional<double> lambda2_oracle;
  double oracle_fit_residual = 0.0;
  double lambda2_asymptotic = 0.0;
  double adjoint_residual = 0.0;
  double adjoint_continuous_residual = 0.0;
  double kernel_eigenvalue = 0.0;
  double next_eigenvalue = 0.0;
  /// Relative difference between exact and oracle (NaN when the oracle is off).
  double relative_gap = 0.0;
  /// Change of the quotient between the front mesh and its refinement (NaN if not run).
  double mesh_drift = 0.0;
};

struct StabilityOptions {
  FrontOptions front;
  SpectralOptions spectral;
  bool oracle = true;
  bool asymptotic = true;
  bool mesh_check = false;
};

/// Adjoint, quotient and (optionally) oracle for a converged front.
StabilityReport stability_report(const FrontSetup& setup, const FrontProfile& front,
                                 const StabilityOptions& opt = {});

struct ContourPoint {
  double delta = 0.0;
  double nu_star = 0.0;
  double nu_crit_asymptotic = 0.0;
  int evaluations = 0;
};

struct ContourResult {
  std::vector<ContourPoint> points;
  double slope = 0.0;
  double intercept = 0.0;
};

struct ContourOptions {
  StabilityOptions stability;
  double rel_tolerance = 1e-4;
  int max_evaluations = 40;
  /// Bracket search factor around the seed.
  double bracket_factor = 2.0;
};

/// lambda_c2(nu; delta) with the front obtained by continuation from `start`
/// (solved from the skeleton when null).
double lambda_c2_at(const FrontSetup& setup, double delta, double nu, const StabilityOptions& opt,
                    FrontProfile* warm = nullptr);

/// Root nu*(delta) of lambda_c2 for each delta, seeded by the singular-limit
/// critical advection, plus the least-squares log-log slope.
ContourResult zero_contour(const FrontSetup& setup, const std::vector<double>& deltas,
                           const ContourOptions& opt = {});

/// Least-squares slope and intercept of log y against log x.
std::pair<double, double> loglog_fit(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace advfront
