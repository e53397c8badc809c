#pragma once

#include <string>
#include <vector>

#include "advfront/equilibria.hpp"
#include "advfront/io.hpp"
#include "advfront/sim2d.hpp"
#include "advfront/spectral.hpp"

namespace advfront {

/// Resolved run configuration. Every field has a default; the YAML document
/// overrides any subset and unknown keys are rejected.
struct RunConfig {
  std::string model = "klausmeier";
  std::vector<double> mu{0.1, 0.1, 2.0};
  Orientation orientation = Orientation::DesertLeft;

  double delta = 1e-3;
  double nu = 0.0;
  /// nu values for branch commands (explicit list or expanded range).
  std::vector<double> nu_values;
  RegimeThresholds thresholds;

  FrontOptions front;
  SpectralOptions spectral;
  bool oracle = true;
  bool mesh_check = false;

  ContinuationParameter continuation_parameter = ContinuationParameter::Nu;
  double continuation_target = 0.0;
  ContinuationOptions continuation;

  std::vector<double> contour_deltas{1e-3, 2e-3, 5e-3, 1e-2};
  double contour_rel_tolerance = 1e-4;
  int contour_max_evaluations = 40;
  double contour_bracket_factor = 2.0;

  EquilibriumStabilityOptions dispersion;
  /// Jump levels for the layer command.
  std::vector<double> layer_v{1.0, 1.5, 2.0};

  SimConfig sim;
  /// Interface mode for the growth-rate check (0 runs a plain simulation).
  int growth_mode = 0;

  std::string output_dir = "out";
  bool write_json = true;
};

/// Parses a YAML document; `source` names it in error messages.
RunConfig parse_run_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_run_config(const std::string& path);

/// Fully resolved configuration as written into output headers.
Json to_json(const RunConfig& c);

FrontSetup make_setup(const RunConfig& c);
ContourOptions contour_options(const RunConfig& c);
StabilityOptions stability_options(const RunConfig& c);

}  // namespace advfront
