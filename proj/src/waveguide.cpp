#include "qad/waveguide.hpp"

#include "qad/constants.hpp"
#include "qad/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace qad::waveguide {

using fem::FieldSolution;
using fem::Region;
using fem::RegionMaterials;

std::string_view to_string(Polarization p) {
  switch (p) {
    case Polarization::quasi_love:
      return "quasi-Love";
    case Polarization::quasi_rayleigh:
      return "quasi-Rayleigh";
    default:
      return "hybrid";
  }
}

ModeClassification classify_mode(const FieldSolution& sol, const RegionMaterials& mats, double threshold) {
  const Eigen::Vector3cd w = fem::mass_products(sol, sol, mats);
  const double x = w(0).real(), y = w(1).real(), z = w(2).real();
  const double total = x + y + z;
  if (!(total > 0)) throw InputError("cannot classify a zero field");
  ModeClassification c;
  c.f_sh = x / total;
  c.f_sagittal = (y + z) / total;
  if (c.f_sh >= threshold)
    c.label = Polarization::quasi_love;
  else if (c.f_sagittal >= threshold)
    c.label = Polarization::quasi_rayleigh;
  return c;
}

double confinement_factor(const FieldSolution& sol, const RegionMaterials& mats, Region region) {
  if (!sol.mesh || !sol.mesh->has_region(region)) throw InputError("region not present in the mesh");
  const auto all = fem::mode_energy(sol, mats);
  const auto in = fem::mode_energy(sol, mats, region);
  const double denom = all.kinetic + all.strain;
  return denom > 0 ? (in.kinetic + in.strain) / denom : 0.0;
}

double mode_overlap(const FieldSolution& a, const FieldSolution& b, const RegionMaterials& mats) {
  if (a.ux.size() != b.ux.size()) return 0.0;
  FieldSolution a_on_b = a;
  a_on_b.mesh = b.mesh;
  const fem::cd ab = fem::mass_products(a_on_b, b, mats).sum();
  const double aa = fem::mass_products(a_on_b, a_on_b, mats).sum().real();
  const double bb = fem::mass_products(b, b, mats).sum().real();
  return aa > 0 && bb > 0 ? std::abs(ab) / std::sqrt(aa * bb) : 0.0;
}

// ---------------------------------------------------------------------------

RegionMaterials Stack::at(double phi) const {
  RegionMaterials r;
  auto wc = waveguide_cut;
  auto sc = substrate_cut;
  wc.azimuth += phi;
  sc.azimuth += phi;
  r.waveguide = materials::rotate_material(waveguide, wc);
  r.substrate = materials::rotate_material(substrate, sc);
  return r;
}

double radiation_cutoff_velocity(const materials::MaterialRecord& m) {
  const bool stiff = m.piezoelectric;
  auto f = [&](double th, double ps) {
    const Eigen::Vector3d n(std::sin(th) * std::cos(ps), std::sin(th) * std::sin(ps), std::cos(th));
    return materials::christoffel_velocities(m, n, stiff)[0] / std::cos(th);
  };
  const double deg = constants::pi / 180.0;
  double bt = 0.0, bp = 0.0, best = f(0.0, 0.0);
  for (int i = 0; i <= 44; ++i)
    for (int j = 0; j < 90; ++j) {
      const double th = 2.0 * i * deg, ps = 4.0 * j * deg;
      const double v = f(th, ps);
      if (v < best) {
        best = v;
        bt = th;
        bp = ps;
      }
    }
  // Pattern search refinement.
  for (double step = 2.0 * deg; step > 1e-6; step *= 0.5) {
    bool moved = true;
    while (moved) {
      moved = false;
      for (auto [dt, dp] : {std::pair{step, 0.0}, {-step, 0.0}, {0.0, step}, {0.0, -step}}) {
        const double th = std::clamp(bt + dt, 0.0, 89.0 * deg);
        const double v = f(th, bp + dp);
        if (v < best * (1 - 1e-15)) {
          best = v;
          bt = th;
          bp += dp;
          moved = true;
        }
      }
    }
  }
  return best;
}

// ---------------------------------------------------------------------------

ModeSolver::ModeSolver(const fem::RidgeGeometry& g, RegionMaterials mats, const SolverSettings& s,
                       const fem::RidgeMeshCounts& counts)
    : geometry_(g), settings_(s) {
  if (!mats.waveguide || !mats.substrate) throw InputError("waveguide and substrate materials are required");
  auto mesh = std::make_shared<const fem::Mesh2D>(fem::build_ridge_mesh(g, counts, s.order));
  v_cut_ = radiation_cutoff_velocity(*mats.substrate);
  v_slow_ = std::min(materials::min_transverse_velocity(*mats.waveguide, false),
                     materials::min_transverse_velocity(*mats.waveguide, true));
  problem_ = std::make_shared<const fem::GuidedProblem>(std::move(mesh), std::move(mats));
}

ModeSolver::ModeSolver(const fem::RidgeGeometry& g, RegionMaterials mats, const SolverSettings& s)
    : ModeSolver(g, std::move(mats), s, fem::RidgeMeshCounts::level(s.mesh_level, g.width / g.thickness)) {}

std::vector<GuidedMode> ModeSolver::modes_at_beta(double beta, int count, fem::EigenDiagnostics* diag) const {
  const auto m = fem::assemble_guided(*problem_, beta);
  fem::EigenOptions opt;
  opt.count = count;
  const auto sols = fem::solve_guided_modes(*problem_, m, opt, diag);
  std::vector<GuidedMode> out;
  int idx = 0;
  for (const auto& s : sols) {
    GuidedMode g;
    g.field = s.field;
    g.beta = beta;
    g.omega = s.omega;
    g.cls = classify_mode(g.field, materials(), settings_.classification_threshold);
    g.confinement = confinement_factor(g.field, materials(), Region::waveguide);
    g.boundary_fraction = fem::boundary_energy_fraction(g.field, materials());
    g.unconverged_domain = g.boundary_fraction > settings_.boundary_flag;
    g.guided = g.confinement > settings_.confinement_threshold;
    g.branch = idx++;
    out.push_back(std::move(g));
  }
  return out;
}

namespace {

/// Sorted eigenfrequencies at fixed beta, cached per beta.
class BranchEvaluator {
 public:
  explicit BranchEvaluator(const ModeSolver& s) : s_(s) {}

  const std::vector<double>& omegas(double beta, int count) {
    auto it = cache_.find(beta);
    if (it != cache_.end() && static_cast<int>(it->second.size()) >= count) return it->second;
    const auto m = fem::assemble_guided(s_.problem(), beta);
    fem::EigenOptions opt;
    opt.count = count;
    const auto sols = fem::solve_guided_modes(s_.problem(), m, opt);
    std::vector<double> w;
    for (const auto& x : sols) w.push_back(x.omega);
    return cache_[beta] = std::move(w);
  }

 private:
  const ModeSolver& s_;
  std::map<double, std::vector<double>> cache_;
};

/// Illinois-accelerated regula falsi for omega_n(beta) = omega0 on [lo, hi].
std::optional<double> solve_branch(BranchEvaluator& ev, int n, double omega0, double lo, double hi, double guess,
                                   double tol) {
  auto g = [&](double b) { return ev.omegas(b, n + 1)[n] / omega0 - 1.0; };
  double a = lo, fa = g(lo);
  if (fa >= 0) return std::nullopt;
  double x = std::clamp(guess, lo * (1 + 1e-3), hi);
  double fx = g(x);
  double b = x, fb = fx;
  if (fx < 0) {
    while (fb < 0) {
      if (b >= hi) return std::nullopt;
      a = b;
      fa = fb;
      b = std::min(b * 1.04, hi);
      fb = g(b);
    }
  } else {
    const double tighter = std::max(lo, x / 1.04);
    if (tighter > lo) {
      const double ft = g(tighter);
      if (ft < 0) {
        a = tighter;
        fa = ft;
      }
    }
  }
  int side = 0;
  for (int it = 0; it < 100 && (b - a) > tol * b; ++it) {
    double c = b - fb * (b - a) / (fb - fa);
    if (!(c > a && c < b)) c = 0.5 * (a + b);
    const double fc = g(c);
    if (fc == 0.0) return c;
    if (fc < 0) {
      a = c;
      fa = fc;
      if (side == -1) fb *= 0.5;
      side = -1;
    } else {
      b = c;
      fb = fc;
      if (side == 1) fa *= 0.5;
      side = 1;
    }
  }
  return b - fb * (b - a) / (fb - fa);
}

}  // namespace

std::vector<GuidedMode> ModeSolver::modes_at_frequency(double f0) const {
  if (!(f0 > 0)) throw InputError("frequency must be positive");
  const double omega0 = constants::two_pi * f0;
  const double lo = omega0 / v_cut_;
  // Narrow ridges carry flexural branches well below the bulk shear speed.
  const double hi = omega0 / (0.25 * v_slow_);
  BranchEvaluator ev(*this);

  int count = std::min(6, settings_.max_candidates);
  std::vector<double> w0;
  for (;;) {
    w0 = ev.omegas(lo, count);
    const bool all_below = std::all_of(w0.begin(), w0.end(), [&](double w) { return w < omega0; });
    if (!all_below || count >= settings_.max_candidates) break;
    count = std::min(count + 6, settings_.max_candidates);
  }
  const int n_candidates =
      static_cast<int>(std::count_if(w0.begin(), w0.end(), [&](double w) { return w < omega0; }));

  std::vector<GuidedMode> out;
  for (int n = 0; n < n_candidates; ++n) {
    const double guess = lo * omega0 / std::max(w0[n], 1e-30);
    const auto root = solve_branch(ev, n, omega0, lo, hi, guess, settings_.beta_tolerance);
    if (!root) continue;
    auto modes = modes_at_beta(*root, n + 1);
    GuidedMode m = std::move(modes[n]);
    m.branch = n;
    out.push_back(std::move(m));
  }
  std::stable_sort(out.begin(), out.end(), [](const GuidedMode& a, const GuidedMode& b) { return a.beta > b.beta; });
  return out;
}

std::vector<GuidedMode> ModeSolver::guided_modes(double f0) const {
  auto all = modes_at_frequency(f0);
  std::vector<GuidedMode> out;
  for (auto& m : all)
    if (m.guided) out.push_back(std::move(m));
  return out;
}

// ---------------------------------------------------------------------------

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  const std::size_t w = std::max<std::size_t>(1, std::min<std::size_t>(n, workers < 1 ? 1 : workers));
  std::vector<std::exception_ptr> errors(n);
  if (w <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < w; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    for (auto& th : pool) th.join();
  }
  // The first failing index wins, independent of scheduling.
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

namespace {

std::string format_length(double m) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f nm", m * 1e9);
  return buf;
}

void finish(SweepResult& r, const RegionMaterials& mats, const SweepOptions& opt) {
  assemble_tracks(r, mats, opt);
  r.guided_count.clear();
  for (const auto& m : r.modes)
    r.guided_count.push_back(
        static_cast<int>(std::count_if(m.begin(), m.end(), [](const GuidedMode& x) { return x.guided; })));
  if (!opt.keep_fields) r.modes.clear();
}

}  // namespace

SweepResult width_sweep(const fem::RidgeGeometry& base, const std::vector<double>& widths, double f0,
                        const Stack& stack, const SweepOptions& opt) {
  if (widths.empty()) throw InputError("width grid is empty");
  if (!std::is_sorted(widths.begin(), widths.end())) throw InputError("widths must be ascending");
  if (!(f0 > 0)) throw InputError("frequency must be positive");
  const auto counts = fem::RidgeMeshCounts::level(opt.solver.mesh_level, widths.back() / base.thickness);
  const auto mats = stack.at(0.0);
  SweepResult r;
  r.grid = widths;
  r.modes.resize(widths.size());
  parallel_for(widths.size(), opt.workers, [&](std::size_t i) {
    fem::RidgeGeometry g = base;
    g.width = widths[i];
    try {
      ModeSolver s(g, mats, opt.solver, counts);
      r.modes[i] = opt.guided_only ? s.guided_modes(f0) : s.modes_at_frequency(f0);
    } catch (const SolverError& e) {
      throw SolverError("width " + format_length(widths[i]) + ": " + e.what(), e.residuals());
    }
  });
  finish(r, mats, opt);
  return r;
}

SweepResult azimuthal_sweep(const fem::RidgeGeometry& g, const std::vector<double>& phis, double f0,
                            const Stack& stack, const SweepOptions& opt) {
  if (phis.empty()) throw InputError("angle grid is empty");
  if (!(f0 > 0)) throw InputError("frequency must be positive");
  const auto counts = fem::RidgeMeshCounts::level(opt.solver.mesh_level, g.width / g.thickness);
  SweepResult r;
  r.grid = phis;
  r.modes.resize(phis.size());
  parallel_for(phis.size(), opt.workers, [&](std::size_t i) {
    try {
      ModeSolver s(g, stack.at(phis[i]), opt.solver, counts);
      r.modes[i] = opt.guided_only ? s.guided_modes(f0) : s.modes_at_frequency(f0);
    } catch (const SolverError& e) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "phi %.3f deg: ", phis[i] * 180.0 / constants::pi);
      throw SolverError(buf + std::string(e.what()), e.residuals());
    }
  });
  finish(r, stack.at(0.0), opt);
  return r;
}

void assemble_tracks(SweepResult& r, const RegionMaterials& mats, const SweepOptions& opt) {
  r.tracks.clear();
  r.crossings.clear();
  std::vector<int> prev_track;  // track id per mode at the previous grid point
  for (std::size_t k = 0; k < r.modes.size(); ++k) {
    const auto& cur = r.modes[k];
    std::vector<int> track(cur.size(), -1);
    if (k > 0) {
      const auto& prev = r.modes[k - 1];
      struct Cand {
        double overlap, dbeta;
        std::size_t i, j;
      };
      std::vector<Cand> cands;
      for (std::size_t i = 0; i < prev.size(); ++i)
        for (std::size_t j = 0; j < cur.size(); ++j) {
          const double o = mode_overlap(prev[i].field, cur[j].field, mats);
          if (o >= opt.overlap_min)
            cands.push_back({o, std::abs(prev[i].beta - cur[j].beta) / cur[j].beta, i, j});
        }
      std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        if (std::abs(a.overlap - b.overlap) > 1e-9) return a.overlap > b.overlap;
        return a.dbeta < b.dbeta;
      });
      std::vector<char> used_prev(prev.size(), 0);
      for (const auto& c : cands) {
        if (used_prev[c.i] || track[c.j] >= 0) continue;
        used_prev[c.i] = 1;
        track[c.j] = prev_track[c.i];
      }
    }
    for (std::size_t j = 0; j < cur.size(); ++j) {
      if (track[j] < 0) {
        track[j] = static_cast<int>(r.tracks.size());
        r.tracks.push_back(DispersionCurve{track[j], {}});
      }
      const auto& m = cur[j];
      r.tracks[track[j]].points.push_back(
          TrackPoint{k, r.grid[k], m.beta, m.omega, m.cls.f_sh, m.confinement, m.cls.label});
    }
    // Neighbouring modes (descending beta) that are close and both mixed.
    for (std::size_t j = 0; j + 1 < cur.size(); ++j) {
      const auto& a = cur[j];
      const auto& b = cur[j + 1];
      const double gap = std::abs(a.beta - b.beta) / (0.5 * (a.beta + b.beta));
      auto mixed = [&](const GuidedMode& m) { return m.cls.f_sh >= opt.mixing_low && m.cls.f_sh <= opt.mixing_high; };
      if (gap < opt.crossing_gap && mixed(a) && mixed(b))
        r.crossings.push_back(AvoidedCrossing{std::min(track[j], track[j + 1]), std::max(track[j], track[j + 1]), k,
                                              r.grid[k], gap});
    }
    prev_track = std::move(track);
  }
}

std::string tracks_csv(const SweepResult& r, std::string_view param_name) {
  std::ostringstream os;
  os << "track," << param_name << ",beta_rad_per_m,omega_rad_per_s,f_SH,confinement,label\n";
  char buf[256];
  for (const auto& t : r.tracks)
    for (const auto& p : t.points) {
      std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g,%.6f,%.6f,", t.track, p.param, p.beta, p.omega, p.f_sh,
                    p.confinement);
      os << buf << to_string(p.label) << '\n';
    }
  return os.str();
}

}  // namespace qad::waveguide
