#include "advfront/mesh.hpp"

#include <algorithm>
#include <cmath>

#include "advfront/kinetics.hpp"

namespace advfront {

namespace {

// Stretched-coordinate stencils (unit spacing), fourth order.
constexpr std::array<double, 5> kD1Center{1.0 / 12, -8.0 / 12, 0.0, 8.0 / 12, -1.0 / 12};
constexpr std::array<double, 5> kD2Center{-1.0 / 12, 16.0 / 12, -30.0 / 12, 16.0 / 12, -1.0 / 12};
// Node 0 from nodes 0..4 (d1) and 0..5 (d2).
constexpr std::array<double, 6> kD1Edge{-25.0 / 12, 48.0 / 12, -36.0 / 12, 16.0 / 12, -3.0 / 12, 0};
constexpr std::array<double, 6> kD2Edge{45.0 / 12,   -154.0 / 12, 214.0 / 12,
                                        -156.0 / 12, 61.0 / 12,   -10.0 / 12};
// Node 1 from nodes 0..4 (d1) and 0..5 (d2).
constexpr std::array<double, 6> kD1Near{-3.0 / 12, -10.0 / 12, 18.0 / 12, -6.0 / 12, 1.0 / 12, 0};
constexpr std::array<double, 6> kD2Near{10.0 / 12, -15.0 / 12, -4.0 / 12, 14.0 / 12, -6.0 / 12, 1.0 / 12};

}  // namespace

double MappedMesh::map(double s) const {
  if (spec_.alpha == 0.0) return spec_.h0 * s;
  return spec_.h0 / spec_.alpha * std::sinh(spec_.alpha * s);
}

double MappedMesh::s_of(double xi) const {
  if (spec_.alpha == 0.0) return xi / spec_.h0;
  return std::asinh(spec_.alpha * xi / spec_.h0) / spec_.alpha;
}

MappedMesh::MappedMesh(const MeshSpec& spec) : spec_(spec) {
  if (!(spec.h0 > 0) || !(spec.alpha >= 0) || !(spec.L_minus > 0) || !(spec.L_plus > 0)) {
    throw InputError("mesh requires h0 > 0, alpha >= 0 and positive extents");
  }
  const long sl = static_cast<long>(std::ceil(s_of(spec.L_minus) - 1e-9));
  const long sr = static_cast<long>(std::ceil(s_of(spec.L_plus) - 1e-9));
  if (sl + sr + 1 < 8) throw InputError("mesh too coarse (fewer than 8 nodes)");
  s_first_ = -sl;
  center_ = static_cast<std::size_t>(sl);
  const std::size_t n = static_cast<std::size_t>(sl + sr + 1);
  xi_.resize(n);
  x1_.resize(n);
  x2_.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double s = static_cast<double>(s_first_ + static_cast<long>(j));
    xi_[j] = map(s);
    if (spec_.alpha == 0.0) {
      x1_[j] = spec_.h0;
      x2_[j] = 0.0;
    } else {
      x1_[j] = spec_.h0 * std::cosh(spec_.alpha * s);
      x2_[j] = spec_.h0 * spec_.alpha * std::sinh(spec_.alpha * s);
    }
  }
  // Gregory end corrections to the trapezoidal rule in s (fourth order).
  weights_.assign(n, 1.0);
  constexpr std::array<double, 3> ends{3.0 / 8, 7.0 / 6, 23.0 / 24};
  for (std::size_t k = 0; k < 3; ++k) {
    weights_[k] = ends[k];
    weights_[n - 1 - k] = ends[k];
  }
  for (std::size_t j = 0; j < n; ++j) weights_[j] *= x1_[j];
}

StencilRow MappedMesh::chain(std::size_t j, bool second) const {
  const std::size_t n = size();
  StencilRow a, b;  // a: d/ds, b: d2/ds2 in the stretched coordinate
  auto load = [](StencilRow& r, std::size_t first, const auto& w, int count, bool mirror,
                 double sign) {
    r.first = first;
    r.count = count;
    for (int k = 0; k < count; ++k) r.w[k] = sign * (mirror ? w[count - 1 - k] : w[k]);
  };
  if (j >= 2 && j + 2 < n) {
    load(a, j - 2, kD1Center, 5, false, 1.0);
    load(b, j - 2, kD2Center, 5, false, 1.0);
  } else if (j == 0) {
    load(a, 0, kD1Edge, 5, false, 1.0);
    load(b, 0, kD2Edge, 6, false, 1.0);
  } else if (j == 1) {
    load(a, 0, kD1Near, 5, false, 1.0);
    load(b, 0, kD2Near, 6, false, 1.0);
  } else if (j == n - 1) {
    load(a, n - 5, kD1Edge, 5, true, -1.0);
    load(b, n - 6, kD2Edge, 6, true, 1.0);
  } else {
    load(a, n - 5, kD1Near, 5, true, -1.0);
    load(b, n - 6, kD2Near, 6, true, 1.0);
  }
  const double x1 = x1_[j], x2 = x2_[j];
  if (!second) {
    for (int k = 0; k < a.count; ++k) a.w[k] /= x1;
    return a;
  }
  // f_xixi = f_ss / x1^2 - x2 f_s / x1^3, merged onto the union of both supports.
  StencilRow r;
  r.first = std::min(a.first, b.first);
  const std::size_t last = std::max(a.first + a.count, b.first + b.count);
  r.count = static_cast<int>(last - r.first);
  for (int k = 0; k < b.count; ++k) r.w[b.first + k - r.first] += b.w[k] / (x1 * x1);
  for (int k = 0; k < a.count; ++k) r.w[a.first + k - r.first] -= x2 * a.w[k] / (x1 * x1 * x1);
  return r;
}

StencilRow MappedMesh::d1(std::size_t j) const { return chain(j, false); }
StencilRow MappedMesh::d2(std::size_t j) const { return chain(j, true); }

double MappedMesh::integrate(std::span<const double> f) const {
  double acc = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) acc += weights_[j] * f[j];
  return acc;
}

std::vector<double> MappedMesh::derivative(std::span<const double> f) const {
  std::vector<double> out(size());
  for (std::size_t j = 0; j < size(); ++j) {
    const StencilRow r = d1(j);
    double acc = 0.0;
    for (int k = 0; k < r.count; ++k) acc += r.w[k] * f[r.first + k];
    out[j] = acc;
  }
  return out;
}

std::vector<double> MappedMesh::second_derivative(std::span<const double> f) const {
  std::vector<double> out(size());
  for (std::size_t j = 0; j < size(); ++j) {
    const StencilRow r = d2(j);
    double acc = 0.0;
    for (int k = 0; k < r.count; ++k) acc += r.w[k] * f[r.first + k];
    out[j] = acc;
  }
  return out;
}

double MappedMesh::interpolate(std::span<const double> f, double x) const {
  const std::size_t n = size();
  if (x <= xi_.front()) return f.front();
  if (x >= xi_.back()) return f.back();
  const double t = s_of(x) - static_cast<double>(s_first_);
  const long j0 = std::clamp(static_cast<long>(std::floor(t)) - 1, 0L, static_cast<long>(n) - 4);
  double acc = 0.0;
  for (int a = 0; a < 4; ++a) {
    double l = 1.0;
    for (int b = 0; b < 4; ++b) {
      if (a != b) l *= (t - static_cast<double>(j0 + b)) / static_cast<double>(a - b);
    }
    acc += l * f[static_cast<std::size_t>(j0 + a)];
  }
  return acc;
}

std::vector<double> MappedMesh::resample(std::span<const double> f,
                                         const MappedMesh& target) const {
  std::vector<double> out(target.size());
  for (std::size_t j = 0; j < target.size(); ++j) out[j] = interpolate(f, target.xi(j));
  return out;
}

MappedMesh MappedMesh::refined() const {
  MeshSpec s = spec_;
  s.h0 *= 0.5;
  s.alpha *= 0.5;
  s.L_minus = L_minus();
  s.L_plus = L_plus();
  return MappedMesh(s);
}

}  // namespace advfront
