#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "advfront/front_solver.hpp"
#include "advfront/io.hpp"

namespace advfront {

enum class XiBoundary { Dirichlet, Neumann };
enum class TimeScheme { Imex1, Richardson };

std::string to_string(XiBoundary b);
std::string to_string(TimeScheme s);
XiBoundary parse_xi_boundary(const std::string& s);
TimeScheme parse_time_scheme(const std::string& s);

/// Initial interface displacement h0(y) added to the front as -h0(y) d/dxi (U, V).
struct PerturbationSpec {
  /// (m, amplitude): amplitude * cos(2 pi m y / Ly), in xi units.
  std::vector<std::pair<int, double>> modes;
  /// Random phases and Gaussian weights over modes 1..noise_modes.
  double noise_amplitude = 0.0;
  int noise_modes = 0;
  std::uint64_t seed = 1;
};

/// Comoving-frame simulation of U_t = U_xixi + U_yy + c U_xi + F and
/// V_t = (V_xixi + V_yy)/delta^2 + (nu + c) V_xi + G on the front's xi-mesh
/// times a periodic y grid.
struct SimConfig {
  double delta = 0.0, nu = 0.0;
  /// Comoving speed; NaN takes the front's speed.
  double c = std::numeric_limits<double>::quiet_NaN();
  double L_y = 100.0;
  int N_y = 32;
  /// Upper bound on the step; the reaction stability probe may lower it.
  double dt = 0.5;
  /// The step is capped at probe_factor / (largest local reaction growth rate).
  double probe_factor = 0.5;
  double t_end = 100.0;
  TimeScheme scheme = TimeScheme::Imex1;
  XiBoundary xi_boundary = XiBoundary::Dirichlet;
  PerturbationSpec perturbation;
  double diagnostic_interval = 1.0;
  /// Interface Fourier modes 0..diag_modes recorded.
  int diag_modes = 4;
  /// 0 disables snapshots.
  double snapshot_interval = 0.0;
  std::string output_dir;
  int workers = 0;  // 0: ADVFRONT_WORKERS
};

Json to_json(const SimConfig& c);

/// Fields stored row by row in y: index j * n_xi + i.
struct SimField {
  std::vector<double> U, V;
  double t = 0.0;
  std::size_t n_xi = 0, n_y = 0;
  /// Smallest U seen so far (tracked, not clamped).
  double min_U = 0.0;
};

struct InterfaceDiagnostics {
  double t = 0.0;
  /// Level-set position per y row (crossing nearest the previous one).
  std::vector<double> h;
  double h_mean = 0.0, h_min = 0.0, h_max = 0.0;
  /// Some row crosses the level set more than once.
  bool multivalued = false;
  int max_crossings = 0;
  /// |a_m| of h for m = 0..diag_modes (a_0 is the mean).
  std::vector<double> amplitudes;
  double min_U = 0.0;
};

class Simulator {
 public:
  Simulator(const FrontSetup& setup, const FrontProfile& front, const SimConfig& cfg);
  ~Simulator();
  Simulator(Simulator&&) noexcept;

  const SimField& field() const { return field_; }
  const SimConfig& config() const { return cfg_; }
  const MappedMesh& mesh() const { return mesh_; }
  double dt() const { return dt_; }
  /// Largest positive real part of the reaction Jacobian over the initial field.
  double reaction_rate() const { return rate_; }
  double level() const { return level_; }

  /// One step of the configured scheme; throws NumericalError on non-finite values.
  void step();
  InterfaceDiagnostics diagnose() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  SimConfig cfg_;
  MappedMesh mesh_;
  SimField field_;
  double dt_ = 0.0, rate_ = 0.0, level_ = 0.0;
};

enum class InterfaceClass { Flat, Cusped, Fingered };
std::string to_string(InterfaceClass c);

struct SimResult {
  std::vector<InterfaceDiagnostics> series;
  SimField final_field;
  double dt = 0.0;
  long steps = 0;
  InterfaceClass classification = InterfaceClass::Flat;
  std::vector<std::string> warnings;
  std::vector<std::string> files;
};

/// Integrates to t_end, recording diagnostics and snapshots on schedule.
SimResult run_simulation(const FrontSetup& setup, const FrontProfile& front, const SimConfig& cfg);

struct GrowthRate {
  int mode = 0;
  double ell = 0.0;
  double sigma = 0.0;
  double t_start = 0.0, t_end = 0.0;
  /// Largest relative deviation of the amplitude from the exponential fit.
  double fit_residual = 0.0;
};

/// Exponential fit of |a_m(t)| over the earliest-starting window that reaches the
/// end of the series with relative deviation below max_residual.
GrowthRate fit_growth_rate(const std::vector<InterfaceDiagnostics>& series, int mode, double L_y,
                           double max_residual = 0.02, int min_points = 8);

/// Single-mode run with amplitude 1e-3 of the interface jump (converted to a
/// displacement through the steepest slope of U) and the fitted rate sigma(ell).
GrowthRate growth_rate_check(const FrontSetup& setup, const FrontProfile& front, SimConfig cfg,
                             int mode = 1);

}  // namespace advfront
