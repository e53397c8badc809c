#pragma once

#include <array>
#include <string>
#include <vector>

#include "advfront/io.hpp"
#include "advfront/mesh.hpp"
#include "advfront/singular_orbits.hpp"

namespace advfront {

/// Traveling front of u'' + c u' + F = 0, v'' + delta^2 (nu + c) v' + delta^2 G = 0
/// on a stretched mesh, anchored so that u(0) is the midpoint of U- and U+.
struct FrontProfile {
  MappedMesh mesh;
  std::vector<double> u, v;
  double c = 0.0;
  double delta = 0.0, nu = 0.0;
  std::string model_name;
  std::vector<double> mu;
  double U_minus = 0.0, V_minus = 0.0, U_plus = 0.0, V_plus = 0.0;
  /// Max residual of the two discretized equations at interior nodes.
  double residual = 0.0;
  int newton_iterations = 0;

  std::size_t size() const { return u.size(); }
  std::vector<double> p() const { return mesh.derivative(u); }
  /// q = v' / delta.
  std::vector<double> q() const;
};

struct FrontOptions {
  double h0 = 0.05;
  double alpha = 0.02;
  /// Slowest boundary decay rate times truncation length.
  double decay_lengths = 30.0;
  double L_min = 40.0;
  int max_newton = 50;
  double tolerance = 1e-9;
  int recenter_rounds = 6;
  /// Halve the mesh until c changes by less than this (0 disables).
  double refine_tolerance = 0.0;
  int max_refinements = 3;
};

/// Eigenvalues of the linearization of the first-order system at a rest state,
/// in the variables (u - U, u', v - V, v'). Requires a 2 + 2 saddle.
struct BoundarySpectrum {
  std::array<double, 4> re{};
  std::array<double, 4> im{};
  double slowest_unstable = 0.0;  // smallest positive real part
  double slowest_stable = 0.0;    // largest negative real part
};

BoundarySpectrum boundary_spectrum(const SteadyState& state, const ReactionModel& model,
                                   double delta, double nu, double c);

/// Mesh extents from the slowest exponential rate (either sign) at each end.
MeshSpec front_mesh_spec(const FrontSetup& setup, double delta, double nu, double c,
                         const FrontOptions& opt = {});

/// Composite profile from the singular skeleton: slow pieces mapped to xi by the
/// regime scaling, the fast layer inserted at xi = 0, and c = c*.
FrontProfile build_initial_guess(const FrontSetup& setup, const SingularSkeleton& skeleton,
                                 const FrontOptions& opt = {});

/// Newton solve of the discretized boundary value problem with projection
/// boundary conditions, a phase condition on u and c as unknown.
FrontProfile solve_front_bvp(const FrontSetup& setup, const FrontProfile& guess,
                             const FrontOptions& opt = {});

/// Max residual of the discretized equations at interior nodes.
double front_residual(const FrontSetup& setup, const FrontProfile& f);

/// Reassembles the profile on a new mesh (constant extension beyond the old ends).
FrontProfile remesh(const FrontProfile& f, const MeshSpec& spec);

/// Translates the profile so that xi = shift moves to xi = 0.
FrontProfile shifted(const FrontProfile& f, double shift);

/// Position of the u midpoint crossing nearest the center, by cubic interpolation.
double interface_position(const FrontProfile& f);

enum class ContinuationParameter { Nu, Delta, Mu1, Mu2, Mu3 };
ContinuationParameter parse_continuation_parameter(const std::string& s);
std::string to_string(ContinuationParameter p);

struct ContinuationOptions {
  double initial_step = 0.0;  // 0: 5% of the distance to the target
  double max_step = 0.0;      // 0: unbounded
  double min_step_fraction = 1e-10;
  double grow = 1.3;
  int fast_newton = 4;
  /// Additional parameter values the branch must land on exactly.
  std::vector<double> checkpoints;
};

struct BranchPoint {
  double parameter = 0.0;
  FrontProfile profile;
  double step = 0.0;
};

struct FrontBranch {
  ContinuationParameter parameter = ContinuationParameter::Nu;
  std::vector<BranchPoint> points;
  bool completed = false;
  std::string termination;
};

/// Setup for a different parameter set of the same model family.
FrontSetup setup_for(const FrontSetup& base, const std::vector<double>& mu);

/// Natural-parameter continuation with secant predictor and adaptive steps.
FrontBranch continue_front(const FrontSetup& setup, const FrontProfile& start,
                           ContinuationParameter parameter, double target,
                           const ContinuationOptions& copt = {}, const FrontOptions& opt = {});

/// CSV (xi, u, p, v, q) with a JSON header line; values in 17 significant digits.
/// Entries of `extra` are added to the header.
void save_front(const FrontProfile& f, const std::string& path, const Json& extra = {});
FrontProfile load_front(const std::string& path);

/// Skeleton, initial guess and Newton solve in one call.
FrontProfile solve_front(const FrontSetup& setup, double delta, double nu,
                         const FrontOptions& opt = {});

}  // namespace advfront
