#pragma once

#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "advfront/kinetics.hpp"

namespace advfront {

/// Coefficients of lambda^2 + (p1 + i q1) lambda + (p2 + i q2) = 0 for the
/// Fourier mode e^{i k x + i l y} about a homogeneous state.
struct DispersionCoefficients {
  double p1 = 0.0, q1 = 0.0, p2 = 0.0, q2 = 0.0;

  /// p1^2 p2 + p1 q1 q2 - q2^2; together with p1 > 0 this decides Re lambda < 0.
  double second_condition() const { return p1 * p1 * p2 + p1 * q1 * q2 - q2 * q2; }
  double margin() const;
  /// Both roots of the quadratic, computed directly.
  std::pair<std::complex<double>, std::complex<double>> roots() const;
};

DispersionCoefficients dispersion_coefficients(const Jacobian& jac, double delta, double nu,
                                               double k, double ell);
DispersionCoefficients dispersion_coefficients(const SteadyState& state, double delta, double nu,
                                               double k, double ell);

struct DispersionSample {
  double k = 0.0, ell = 0.0, p1 = 0.0, margin = 0.0;
};

struct EquilibriumStabilityOptions {
  double k_max = 0.0;    // 0: derived from the turnover scale
  double ell_max = 0.0;  // 0: derived from the turnover scale
  double decades = 10.0; // log-grid spans [max * 10^-decades, max]
  int n_grid = 60;
  bool keep_samples = false;
};

struct EquilibriumStabilityReport {
  bool stable = false;
  double worst_margin = 0.0;
  double argmin_k = 0.0;
  double argmin_ell = 0.0;
  double k_max = 0.0, ell_max = 0.0, k_min = 0.0, ell_min = 0.0;
  std::vector<std::string> warnings;
  std::vector<DispersionSample> samples;
};

/// Grid sweep of both Routh-type conditions over (k, l) >= 0 (both are even in k
/// and l), followed by a Nelder-Mead refinement from the grid minimum.
EquilibriumStabilityReport check_equilibrium_stability(const SteadyState& state, double delta,
                                                       double nu,
                                                       const EquilibriumStabilityOptions& opt = {});

/// Minimal decay turnover scale max(1, 1/delta) sqrt(|F_u| + |G_v|).
double dispersion_turnover_scale(const Jacobian& jac, double delta);

}  // namespace advfront
