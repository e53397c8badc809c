#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace advfront {

/// Geometry of a stretched 1D mesh xi(s) = (h0/alpha) sinh(alpha s) sampled at
/// integer s. Spacing is h0 at xi = 0 and grows like alpha |xi| far away;
/// alpha = 0 gives a uniform mesh of spacing h0.
struct MeshSpec {
  double h0 = 0.02;
  double alpha = 0.01;
  double L_minus = 100.0;
  double L_plus = 100.0;
};

/// Coefficients of a finite-difference row: values at nodes first..first+count-1.
struct StencilRow {
  std::size_t first = 0;
  int count = 0;
  std::array<double, 6> w{};
};

/// Stretched mesh with fourth-order derivative stencils in the stretched
/// coordinate and Gregory-corrected trapezoidal weights.
class MappedMesh {
 public:
  MappedMesh() = default;
  explicit MappedMesh(const MeshSpec& spec);

  const MeshSpec& spec() const { return spec_; }
  std::size_t size() const { return xi_.size(); }
  std::span<const double> xi() const { return xi_; }
  double xi(std::size_t j) const { return xi_[j]; }
  double L_minus() const { return -xi_.front(); }
  double L_plus() const { return xi_.back(); }
  /// Index of the node at xi = 0.
  std::size_t center() const { return center_; }

  /// d/dxi and d^2/dxi^2 rows at node j (one-sided at the ends).
  StencilRow d1(std::size_t j) const;
  StencilRow d2(std::size_t j) const;

  std::span<const double> weights() const { return weights_; }
  double integrate(std::span<const double> f) const;
  std::vector<double> derivative(std::span<const double> f) const;
  std::vector<double> second_derivative(std::span<const double> f) const;

  /// Stretched coordinate of a physical point.
  double s_of(double xi) const;
  /// Cubic Lagrange interpolation in s; clamps to end values outside the mesh.
  double interpolate(std::span<const double> f, double xi) const;
  std::vector<double> resample(std::span<const double> f, const MappedMesh& target) const;

  /// Local spacing dxi/ds at node j.
  double spacing(std::size_t j) const { return x1_[j]; }

  /// Same extent with spacing halved everywhere (h0/2, alpha/2); contains the
  /// original nodes.
  MappedMesh refined() const;

 private:
  MeshSpec spec_;
  long s_first_ = 0;
  std::size_t center_ = 0;
  std::vector<double> xi_, x1_, x2_, weights_;

  double map(double s) const;
  StencilRow chain(std::size_t j, bool second) const;
};

}  // namespace advfront
