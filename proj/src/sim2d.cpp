#include "advfront/sim2d.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>

#include "advfront/parallel.hpp"

namespace advfront {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using LU = Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>>;

void factor(LU& lu, const SpMat& M) {
  lu.compute(M);
  if (lu.info() != Eigen::Success) throw NumericalError("simulation: implicit operator factorization failed");
}

}  // namespace

std::string to_string(XiBoundary b) { return b == XiBoundary::Dirichlet ? "dirichlet" : "neumann"; }
std::string to_string(TimeScheme s) { return s == TimeScheme::Imex1 ? "imex1" : "richardson"; }
std::string to_string(InterfaceClass c) {
  switch (c) {
    case InterfaceClass::Flat:
      return "flat";
    case InterfaceClass::Cusped:
      return "cusped";
    case InterfaceClass::Fingered:
      return "fingered";
  }
  return "flat";
}

XiBoundary parse_xi_boundary(const std::string& s) {
  if (s == "dirichlet") return XiBoundary::Dirichlet;
  if (s == "neumann") return XiBoundary::Neumann;
  throw InputError("unknown xi boundary '" + s + "' (dirichlet or neumann)");
}

TimeScheme parse_time_scheme(const std::string& s) {
  if (s == "imex1") return TimeScheme::Imex1;
  if (s == "richardson") return TimeScheme::Richardson;
  throw InputError("unknown time scheme '" + s + "' (imex1 or richardson)");
}

Json to_json(const SimConfig& c) {
  Json modes = Json::array();
  for (const auto& [m, a] : c.perturbation.modes) modes.push_back({{"m", m}, {"amplitude", format_double(a)}});
  return Json{{"delta", format_double(c.delta)},
              {"nu", format_double(c.nu)},
              {"c", format_double(c.c)},
              {"L_y", format_double(c.L_y)},
              {"N_y", c.N_y},
              {"dt", format_double(c.dt)},
              {"probe_factor", format_double(c.probe_factor)},
              {"t_end", format_double(c.t_end)},
              {"scheme", to_string(c.scheme)},
              {"xi_boundary", to_string(c.xi_boundary)},
              {"perturbation",
               {{"modes", modes},
                {"noise_amplitude", format_double(c.perturbation.noise_amplitude)},
                {"noise_modes", c.perturbation.noise_modes},
                {"seed", c.perturbation.seed}}},
              {"diagnostic_interval", format_double(c.diagnostic_interval)},
              {"diag_modes", c.diag_modes},
              {"snapshot_interval", format_double(c.snapshot_interval)}};
}

struct Simulator::Impl {
  ModelPtr model;
  const MappedMesh* mesh = nullptr;
  double c = 0.0, delta = 0.0, nu = 0.0;
  std::size_t n = 0, ny = 0;
  double dy = 0.0;
  XiBoundary bc = XiBoundary::Dirichlet;
  int workers = 1;
  /// Jacobian of the initial front at each xi node.
  std::vector<Jacobian> J0;
  /// Real Fourier basis in y: row k holds mode wavenumber index mode_of[k].
  Eigen::MatrixXd T, Tinv;
  std::vector<int> mode_of;
  /// Per-mode factorizations of I - h (L_xi - ell^2 D + J0) for the step sizes in use.
  std::vector<std::unique_ptr<LU>> full, half;
  Eigen::MatrixXd RU, RV;  // ny x n work arrays

  /// Eigenvalue of the periodic second difference for mode m.
  double symbol(int m) const {
    if (ny < 3) return 0.0;
    return (2.0 - 2.0 * std::cos(2.0 * std::numbers::pi * m / ny)) / (dy * dy);
  }

  void build_basis() {
    T.resize(ny, ny);
    mode_of.assign(ny, 0);
    std::size_t k = 0;
    for (int m = 0; k < ny; ++m) {
      for (int part = 0; part < 2 && k < ny; ++part) {
        if (part == 1 && (m == 0 || 2 * m == static_cast<int>(ny))) continue;
        for (std::size_t j = 0; j < ny; ++j) {
          const double x = 2.0 * std::numbers::pi * m * static_cast<double>(j) / ny;
          T(k, j) = part == 0 ? std::cos(x) : std::sin(x);
        }
        mode_of[k++] = m;
      }
    }
    Tinv = T.inverse();
  }

  std::vector<std::unique_ptr<LU>> make_factors(double h) const {
    const int max_mode = *std::max_element(mode_of.begin(), mode_of.end());
    std::vector<std::unique_ptr<LU>> out(max_mode + 1);
    const double dv = 1.0 / (delta * delta);
    for (int m = 0; m <= max_mode; ++m) {
      const double l2 = symbol(m);
      std::vector<Eigen::Triplet<double>> t;
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = 2 * i;
        if (i == 0 || i + 1 == n) {
          if (bc == XiBoundary::Dirichlet) {
            t.emplace_back(r, r, 1.0);
            t.emplace_back(r + 1, r + 1, 1.0);
          } else {
            const StencilRow d = mesh->d1(i);
            for (int q = 0; q < d.count; ++q) {
              t.emplace_back(r, 2 * (d.first + q), d.w[q]);
              t.emplace_back(r + 1, 2 * (d.first + q) + 1, d.w[q]);
            }
          }
          continue;
        }
        const StencilRow a = mesh->d1(i), b = mesh->d2(i);
        for (int q = 0; q < b.count; ++q) {
          t.emplace_back(r, 2 * (b.first + q), -h * b.w[q]);
          t.emplace_back(r + 1, 2 * (b.first + q) + 1, -h * dv * b.w[q]);
        }
        for (int q = 0; q < a.count; ++q) {
          t.emplace_back(r, 2 * (a.first + q), -h * c * a.w[q]);
          t.emplace_back(r + 1, 2 * (a.first + q) + 1, -h * (nu + c) * a.w[q]);
        }
        const Jacobian& J = J0[i];
        t.emplace_back(r, r, 1.0 + h * l2 - h * J.Fu);
        t.emplace_back(r, r + 1, -h * J.Fv);
        t.emplace_back(r + 1, r, -h * J.Gu);
        t.emplace_back(r + 1, r + 1, 1.0 + h * dv * l2 - h * J.Gv);
      }
      SpMat M(2 * n, 2 * n);
      M.setFromTriplets(t.begin(), t.end());
      M.makeCompressed();
      out[m] = std::make_unique<LU>();
      factor(*out[m], M);
    }
    return out;
  }

  static double apply(const StencilRow& r, const double* g) {
    double s = 0.0;
    for (int k = 0; k < r.count; ++k) s += r.w[k] * g[r.first + k];
    return s;
  }

  // (I - h A0)(I - h J0)^{-1}(I - h J) dW = h (L W + R(W)), A0 the linearization
  // about the initial front (diagonal in the y Fourier basis), J the local
  // reaction Jacobian and J0 its value on the initial front.
  void advance(SimField& w, double h, const std::vector<std::unique_ptr<LU>>& f) {
    RU.setZero(ny, n);
    RV.setZero(ny, n);
    const double dv = 1.0 / (delta * delta);
    const double iy = ny >= 3 ? 1.0 / (dy * dy) : 0.0;
    parallel_for(
        ny,
        [&](std::size_t j) {
          const std::size_t o = j * n;
          const std::size_t up = ((j + 1) % ny) * n, dn = ((j + ny - 1) % ny) * n;
          const double* U = w.U.data() + o;
          const double* V = w.V.data() + o;
          for (std::size_t i = 1; i + 1 < n; ++i) {
            const StencilRow a = mesh->d1(i), b = mesh->d2(i);
            const ReactionValues r = eval_reaction(*model, U[i], V[i]);
            const double lyu = iy * (w.U[up + i] - 2.0 * U[i] + w.U[dn + i]);
            const double lyv = iy * (w.V[up + i] - 2.0 * V[i] + w.V[dn + i]);
            const double ru = h * (apply(b, U) + c * apply(a, U) + lyu + r.F);
            const double rv = h * (dv * (apply(b, V) + lyv) + (nu + c) * apply(a, V) + r.G);
            const Jacobian J = model->partials(U[i], V[i]);
            const Jacobian& K = J0[i];
            const double m11 = 1.0 - h * J.Fu, m12 = -h * J.Fv, m21 = -h * J.Gu, m22 = 1.0 - h * J.Gv;
            const double det = m11 * m22 - m12 * m21;
            const double zu = (m22 * ru - m12 * rv) / det, zv = (m11 * rv - m21 * ru) / det;
            RU(j, i) = (1.0 - h * K.Fu) * zu - h * K.Fv * zv;
            RV(j, i) = -h * K.Gu * zu + (1.0 - h * K.Gv) * zv;
          }
          if (bc == XiBoundary::Neumann) {
            for (std::size_t i : {std::size_t{0}, n - 1}) {
              const StencilRow r = mesh->d1(i);
              RU(j, i) = -apply(r, U);
              RV(j, i) = -apply(r, V);
            }
          }
        },
        workers);
    Eigen::MatrixXd FU = T * RU, FV = T * RV;
    parallel_for(
        ny,
        [&](std::size_t k) {
          Eigen::VectorXd rhs(2 * n);
          for (std::size_t i = 0; i < n; ++i) {
            rhs[2 * i] = FU(k, i);
            rhs[2 * i + 1] = FV(k, i);
          }
          const Eigen::VectorXd x = f[mode_of[k]]->solve(rhs);
          for (std::size_t i = 0; i < n; ++i) {
            FU(k, i) = x[2 * i];
            FV(k, i) = x[2 * i + 1];
          }
        },
        workers);
    RU.noalias() = Tinv * FU;
    RV.noalias() = Tinv * FV;
    for (std::size_t j = 0; j < ny; ++j) {
      for (std::size_t i = 0; i < n; ++i) {
        w.U[j * n + i] += RU(j, i);
        w.V[j * n + i] += RV(j, i);
      }
    }
  }
};

Simulator::Simulator(const FrontSetup& setup, const FrontProfile& front, const SimConfig& cfg)
    : impl_(std::make_unique<Impl>()), cfg_(cfg), mesh_(front.mesh) {
  if (front.size() < 8) throw InputError("simulation needs a converged front profile");
  if (cfg_.delta == 0.0) cfg_.delta = front.delta;
  if (cfg_.nu == 0.0) cfg_.nu = front.nu;
  if (cfg_.delta != front.delta || cfg_.nu != front.nu) {
    throw InputError("simulation (delta, nu) differ from the front profile's");
  }
  if (std::isnan(cfg_.c)) cfg_.c = front.c;
  if (!(cfg_.L_y > 0) || !(cfg_.dt > 0) || !(cfg_.t_end >= 0) || !(cfg_.probe_factor > 0)) {
    throw InputError("simulation: L_y, dt, probe_factor must be positive and t_end nonnegative");
  }
  if (cfg_.N_y < 1 || cfg_.N_y == 2) throw InputError("simulation: N_y must be 1 or at least 3");
  if (cfg_.diag_modes < 0 || cfg_.diagnostic_interval <= 0) {
    throw InputError("simulation: diagnostic settings must be positive");
  }
  Impl& m = *impl_;
  m.model = setup.model;
  m.c = cfg_.c;
  m.delta = cfg_.delta;
  m.nu = cfg_.nu;
  m.n = front.size();
  m.ny = static_cast<std::size_t>(cfg_.N_y);
  m.dy = cfg_.L_y / cfg_.N_y;
  m.bc = cfg_.xi_boundary;
  m.mesh = &mesh_;
  m.workers = cfg_.workers > 0 ? cfg_.workers : worker_count();
  level_ = 0.5 * (setup.minus.U + setup.plus.U);

  // Initial field: front shifted by h0(y) to first order.
  std::vector<double> h0(m.ny, 0.0);
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t j = 0; j < m.ny; ++j) {
    const double y = j * m.dy;
    for (const auto& [mode, amp] : cfg_.perturbation.modes) {
      h0[j] += amp * std::cos(two_pi * mode * y / cfg_.L_y);
    }
  }
  if (cfg_.perturbation.noise_amplitude > 0 && cfg_.perturbation.noise_modes > 0) {
    std::mt19937_64 rng(cfg_.perturbation.seed);
    std::normal_distribution<double> N(0.0, 1.0);
    std::uniform_real_distribution<double> P(0.0, two_pi);
    const int M = cfg_.perturbation.noise_modes;
    for (int k = 1; k <= M; ++k) {
      const double a = cfg_.perturbation.noise_amplitude * N(rng) / std::sqrt(static_cast<double>(M));
      const double phase = P(rng);
      for (std::size_t j = 0; j < m.ny; ++j) h0[j] += a * std::cos(two_pi * k * j * m.dy / cfg_.L_y + phase);
    }
  }
  const auto du = mesh_.derivative(front.u), dv = mesh_.derivative(front.v);
  field_.n_xi = m.n;
  field_.n_y = m.ny;
  field_.U.resize(m.n * m.ny);
  field_.V.resize(m.n * m.ny);
  for (std::size_t j = 0; j < m.ny; ++j) {
    for (std::size_t i = 0; i < m.n; ++i) {
      const bool end = i == 0 || i + 1 == m.n;
      field_.U[j * m.n + i] = front.u[i] - (end ? 0.0 : h0[j] * du[i]);
      field_.V[j * m.n + i] = front.v[i] - (end ? 0.0 : h0[j] * dv[i]);
    }
  }
  field_.min_U = *std::min_element(field_.U.begin(), field_.U.end());

  // Probe: the reaction is linearly implicit, so dt resolves the fastest local growth.
  rate_ = 0.0;
  for (std::size_t k = 0; k < field_.U.size(); ++k) {
    const Jacobian J = setup.model->partials(field_.U[k], field_.V[k]);
    const double tr = J.Fu + J.Gv, det = J.Fu * J.Gv - J.Fv * J.Gu;
    const std::complex<double> disc = std::sqrt(std::complex<double>(tr * tr - 4.0 * det));
    rate_ = std::max({rate_, (0.5 * (tr + disc)).real(), (0.5 * (tr - disc)).real()});
  }
  dt_ = rate_ > 0 ? std::min(cfg_.dt, cfg_.probe_factor / rate_) : cfg_.dt;
  if (cfg_.t_end > 0) {
    const double steps = std::ceil(cfg_.t_end / dt_ - 1e-9);
    dt_ = cfg_.t_end / steps;
  }
  m.J0.resize(m.n);
  for (std::size_t i = 0; i < m.n; ++i) m.J0[i] = setup.model->partials(front.u[i], front.v[i]);
  m.build_basis();
  m.full = m.make_factors(dt_);
  if (cfg_.scheme == TimeScheme::Richardson) m.half = m.make_factors(0.5 * dt_);
}

Simulator::~Simulator() = default;
Simulator::Simulator(Simulator&&) noexcept = default;

void Simulator::step() {
  Impl& m = *impl_;
  if (cfg_.scheme == TimeScheme::Imex1) {
    m.advance(field_, dt_, m.full);
  } else {
    SimField coarse = field_;
    m.advance(coarse, dt_, m.full);
    m.advance(field_, 0.5 * dt_, m.half);
    m.advance(field_, 0.5 * dt_, m.half);
    for (std::size_t k = 0; k < field_.U.size(); ++k) {
      field_.U[k] = 2.0 * field_.U[k] - coarse.U[k];
      field_.V[k] = 2.0 * field_.V[k] - coarse.V[k];
    }
  }
  field_.t += dt_;
  for (std::size_t k = 0; k < field_.U.size(); ++k) {
    if (!std::isfinite(field_.U[k]) || !std::isfinite(field_.V[k])) {
      const std::size_t j = k / m.n, i = k % m.n;
      std::ostringstream os;
      os << "simulation blew up at t = " << field_.t << ", xi = " << mesh_.xi(i) << ", y = " << j * m.dy
         << " (node " << i << ", row " << j << ")";
      throw NumericalError(os.str());
    }
    field_.min_U = std::min(field_.min_U, field_.U[k]);
  }
}

InterfaceDiagnostics Simulator::diagnose() const {
  const Impl& m = *impl_;
  InterfaceDiagnostics d;
  d.t = field_.t;
  d.min_U = field_.min_U;
  d.h.assign(m.ny, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t j = 0; j < m.ny; ++j) {
    const double* u = field_.U.data() + j * m.n;
    int crossings = 0;
    double best = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i + 1 < m.n; ++i) {
      const double a = u[i] - level_, b = u[i + 1] - level_;
      if ((a < 0) != (b < 0)) {
        ++crossings;
        const double x = mesh_.xi(i) + (mesh_.xi(i + 1) - mesh_.xi(i)) * a / (a - b);
        if (std::isnan(best) || std::abs(x) < std::abs(best)) best = x;
      }
    }
    d.h[j] = best;
    d.max_crossings = std::max(d.max_crossings, crossings);
  }
  d.multivalued = d.max_crossings > 1;
  d.h_min = *std::min_element(d.h.begin(), d.h.end());
  d.h_max = *std::max_element(d.h.begin(), d.h.end());
  double s = 0.0;
  for (double h : d.h) s += h;
  d.h_mean = s / m.ny;
  d.amplitudes.assign(cfg_.diag_modes + 1, 0.0);
  for (int k = 0; k <= cfg_.diag_modes; ++k) {
    std::complex<double> a = 0.0;
    for (std::size_t j = 0; j < m.ny; ++j) {
      a += d.h[j] * std::polar(1.0, -2.0 * std::numbers::pi * k * static_cast<double>(j) / m.ny);
    }
    d.amplitudes[k] = std::abs(a) * (k == 0 ? 1.0 : 2.0) / m.ny;
  }
  return d;
}

namespace {

Json grid_json(const Simulator& sim) {
  const MeshSpec& s = sim.mesh().spec();
  return Json{{"n_xi", sim.field().n_xi},
              {"n_y", sim.field().n_y},
              {"xi_mesh",
               {{"h0", format_double(s.h0)},
                {"alpha", format_double(s.alpha)},
                {"L_minus", format_double(s.L_minus)},
                {"L_plus", format_double(s.L_plus)}}},
              {"L_y", format_double(sim.config().L_y)},
              {"layout", "row-major in y: index j * n_xi + i"}};
}

std::vector<std::string> write_snapshot(const Simulator& sim, const Json& params, long step) {
  char name[64];
  std::vector<std::string> files;
  for (const char* f : {"U", "V"}) {
    std::snprintf(name, sizeof name, "snapshot_%08ld_%s.bin", step, f);
    const std::string path = sim.config().output_dir + "/" + name;
    Json side{{"field", f},
              {"time", format_double(sim.field().t)},
              {"step", step},
              {"grid", grid_json(sim)},
              {"params", params},
              {"config", to_json(sim.config())},
              {"dt", format_double(sim.dt())}};
    write_binary_array(path, f[0] == 'U' ? sim.field().U : sim.field().V, side);
    files.push_back(path);
  }
  return files;
}

}  // namespace

SimResult run_simulation(const FrontSetup& setup, const FrontProfile& front, const SimConfig& cfg) {
  Simulator sim(setup, front, cfg);
  SimResult res;
  res.dt = sim.dt();
  const bool out = !cfg.output_dir.empty();
  if (out) ensure_directory(cfg.output_dir);
  Json params{{"model", front.model_name}, {"delta", format_double(front.delta)}, {"nu", format_double(front.nu)}};
  std::vector<std::string> mu;
  for (double x : front.mu) mu.push_back(format_double(x));
  params["mu"] = mu;
  params["front_c"] = format_double(front.c);

  const long total = cfg.t_end > 0 ? std::lround(cfg.t_end / sim.dt()) : 0;
  const long diag_every = std::max(1L, std::lround(cfg.diagnostic_interval / sim.dt()));
  const long snap_every =
      cfg.snapshot_interval > 0 ? std::max(1L, std::lround(cfg.snapshot_interval / sim.dt())) : 0;
  const double edge = 0.9 * std::min(sim.mesh().L_minus(), sim.mesh().L_plus());
  bool warned_edge = false;

  res.series.push_back(sim.diagnose());
  if (out && snap_every) {
    auto f = write_snapshot(sim, params, 0);
    res.files.insert(res.files.end(), f.begin(), f.end());
  }
  for (long s = 1; s <= total; ++s) {
    sim.step();
    if (s % diag_every == 0 || s == total) {
      res.series.push_back(sim.diagnose());
      const auto& d = res.series.back();
      if (!warned_edge && std::max(std::abs(d.h_min), std::abs(d.h_max)) > edge) {
        res.warnings.push_back("interface within 10% of a xi boundary at t = " + format_double(d.t));
        warned_edge = true;
      }
    }
    if (out && snap_every && (s % snap_every == 0 || s == total)) {
      auto f = write_snapshot(sim, params, s);
      res.files.insert(res.files.end(), f.begin(), f.end());
    }
  }
  res.steps = total;
  res.final_field = sim.field();
  if (res.final_field.min_U < -1e-6) {
    res.warnings.push_back("U dropped below -1e-6 (min " + format_double(res.final_field.min_U) + ")");
  }

  bool multivalued = false;
  for (const auto& d : res.series) multivalued = multivalued || d.multivalued;
  const double spread0 = res.series.front().h_max - res.series.front().h_min;
  const double spread1 = res.series.back().h_max - res.series.back().h_min;
  if (multivalued) {
    res.classification = InterfaceClass::Fingered;
  } else if (spread1 > 10.0 * spread0 && spread1 > 10.0 * front.mesh.spec().h0) {
    res.classification = InterfaceClass::Cusped;
  } else {
    res.classification = InterfaceClass::Flat;
  }

  if (out) {
    Json h{{"kind", "interface_diagnostics"},
           {"params", params},
           {"config", to_json(sim.config())},
           {"grid", grid_json(sim)},
           {"dt", format_double(sim.dt())},
           {"reaction_rate", format_double(sim.reaction_rate())},
           {"classification", to_string(res.classification)},
           {"warnings", res.warnings}};
    std::vector<std::string> cols{"t", "h_mean", "h_min", "h_max", "multivalued", "max_crossings", "min_U"};
    for (int k = 0; k <= cfg.diag_modes; ++k) cols.push_back("a_" + std::to_string(k));
    std::vector<std::vector<double>> rows;
    for (const auto& d : res.series) {
      std::vector<double> r{d.t, d.h_mean, d.h_min, d.h_max, d.multivalued ? 1.0 : 0.0,
                            static_cast<double>(d.max_crossings), d.min_U};
      r.insert(r.end(), d.amplitudes.begin(), d.amplitudes.end());
      rows.push_back(std::move(r));
    }
    const std::string path = cfg.output_dir + "/interface.csv";
    write_csv(path, h, cols, rows);
    res.files.push_back(path);
  }
  return res;
}

GrowthRate fit_growth_rate(const std::vector<InterfaceDiagnostics>& series, int mode, double L_y,
                           double max_residual, int min_points) {
  if (series.empty() || mode < 0 || static_cast<std::size_t>(mode) >= series.front().amplitudes.size()) {
    throw InputError("growth rate fit: mode not recorded");
  }
  const std::size_t N = series.size();
  if (N < static_cast<std::size_t>(min_points)) throw NumericalError("growth rate fit: series too short");
  std::vector<double> t(N), la(N);
  for (std::size_t k = 0; k < N; ++k) {
    t[k] = series[k].t;
    const double a = series[k].amplitudes[mode];
    if (!(a > 0)) throw NumericalError("growth rate fit: amplitude vanished");
    la[k] = std::log(a);
  }
  for (std::size_t s = 0; s + min_points <= N; ++s) {
    double st = 0, sl = 0, stt = 0, stl = 0;
    const double n = static_cast<double>(N - s);
    for (std::size_t k = s; k < N; ++k) {
      st += t[k];
      sl += la[k];
      stt += t[k] * t[k];
      stl += t[k] * la[k];
    }
    const double slope = (n * stl - st * sl) / (n * stt - st * st);
    const double icpt = (sl - slope * st) / n;
    double worst = 0.0;
    for (std::size_t k = s; k < N; ++k) worst = std::max(worst, std::abs(std::expm1(la[k] - icpt - slope * t[k])));
    if (worst <= max_residual) {
      GrowthRate g;
      g.mode = mode;
      g.ell = 2.0 * std::numbers::pi * mode / L_y;
      g.sigma = slope;
      g.t_start = t[s];
      g.t_end = t[N - 1];
      g.fit_residual = worst;
      return g;
    }
  }
  throw NumericalError("growth rate fit: no clean exponential window found");
}

GrowthRate growth_rate_check(const FrontSetup& setup, const FrontProfile& front, SimConfig cfg, int mode) {
  if (mode < 1) throw InputError("growth rate check needs a mode m >= 1");
  const auto du = front.p();
  double slope = 0.0;
  for (double d : du) slope = std::max(slope, std::abs(d));
  const double jump = std::abs(setup.plus.U - setup.minus.U);
  cfg.perturbation = PerturbationSpec{};
  cfg.perturbation.modes = {{mode, 1e-3 * jump / slope}};
  cfg.diag_modes = std::max(cfg.diag_modes, mode);
  cfg.snapshot_interval = 0.0;
  const SimResult r = run_simulation(setup, front, cfg);
  return fit_growth_rate(r.series, mode, cfg.L_y);
}

}  // namespace advfront
