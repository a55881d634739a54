#include "qad/coupling.hpp"

#include "qad/constants.hpp"
#include "qad/errors.hpp"
#include "shape.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace qad::coupling {

using constants::elementary_charge;
using constants::hbar;
using constants::planck;
using constants::two_pi;

double TransmonParams::shunt_capacitance() const {
  return elementary_charge * elementary_charge / (2.0 * ec);
}

double default_charging_energy() { return planck * 200e6; }

TransmonParams transmon_from_target(double f01, double ec) {
  if (!(f01 > 0)) throw InputError("qubit frequency must be positive");
  if (!(ec > 0)) throw InputError("charging energy must be positive");
  TransmonParams t;
  t.f01 = f01;
  t.ec = ec;
  const double s = planck * f01 + ec;
  t.ej = s * s / (8.0 * ec);
  if (t.ratio() < 30.0) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "E_J/E_c = %.3g is below the transmon regime (30)", t.ratio());
    throw RegimeError(buf);
  }
  t.n_zpf = std::pow(t.ej / (8.0 * ec), 0.25) / std::sqrt(2.0);
  return t;
}

// ---------------------------------------------------------------------------

double normalization_denominator(const fem::FieldSolution& f, const fem::RegionMaterials& mats, double radius) {
  if (!(radius > 0)) throw InputError("ring radius must be positive");
  // Each energy term carries a factor 1/2 the normalisation integral omits.
  return 2.0 * fem::mode_energy(f, mats).total() * two_pi * radius;
}

QuantizedMode normalize_mode(const fem::FieldSolution& f, const fem::RegionMaterials& mats, double radius) {
  const double den = normalization_denominator(f, mats, radius);
  if (!(den > 0)) throw InputError("cannot quantise a zero-energy field");
  if (!(f.omega > 0)) throw InputError("mode frequency must be positive");
  QuantizedMode q;
  q.denominator = den;
  q.omega = f.omega;
  q.radius = radius;
  q.xi = std::sqrt(hbar * f.omega / den);
  q.azimuthal_index = std::lround(f.beta * radius);
  q.field = f;
  return q;
}

// ---------------------------------------------------------------------------

PeriodProjection::PeriodProjection(const idt::IdtCell& cell, double beta, int samples)
    : sampler_(cell.field.mesh, cell.field.potential),
      beta_(beta),
      period_(cell.geometry.period),
      film_(cell.geometry.film_thickness),
      samples_(samples) {
  if (samples < 8) throw InputError("too few samples along the period");
}

Eigen::Vector2cd PeriodProjection::at(double y) const {
  if (y > film_) return Eigen::Vector2cd::Zero();
  auto it = std::lower_bound(cache_.begin(), cache_.end(), y,
                             [](const std::pair<double, Eigen::Vector2cd>& a, double v) { return a.first < v; });
  if (it != cache_.end() && it->first == y) return it->second;
  Eigen::Vector2cd acc = Eigen::Vector2cd::Zero();
  const double dz = period_ / samples_;
  for (int k = 0; k < samples_; ++k) {
    const double z = (k + 0.5) * dz;
    const auto g = sampler_.gradient(Eigen::Vector2d(z, y));
    if (!g) continue;
    const std::complex<double> ph = std::polar(dz, -beta_ * z);
    acc(0) += -(*g)(1) * ph;  // E_y
    acc(1) += -(*g)(0) * ph;  // E_z
  }
  cache_.insert(it, {y, acc});
  return acc;
}

std::complex<double> overlap_integral(const fem::FieldSolution& f, const fem::RegionMaterials& mats,
                                      const PeriodProjection& zeta) {
  const auto& mesh = *f.mesh;
  const auto& rule = fem::detail::triangle_rule();
  const fem::cd ib(0.0, f.beta);
  std::complex<double> total = 0.0;
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    const auto& el = mesh.elements[e];
    const auto* m = mats.find(el.region);
    if (!m || !m->piezoelectric) continue;
    const auto xy = mesh.element_coordinates(static_cast<int>(e));
    const auto geo = fem::detail::triangle_geometry(xy[0], xy[1], xy[2]);
    const Eigen::Matrix<double, 6, 3> et = m->piezo.e.transpose();
    for (const auto& q : rule) {
      const auto s = fem::detail::evaluate_shape(mesh.order(), geo, q.l);
      fem::cd ux = 0, uy = 0, uz = 0, uxx = 0, uxy = 0, uyx = 0, uyy = 0, uzx = 0, uzy = 0;
      double y = 0;
      for (int k = 0; k < s.n; ++k) {
        const int n = el.nodes[k];
        ux += s.N[k] * f.ux(n);
        uy += s.N[k] * f.uy(n);
        uz += s.N[k] * f.uz(n);
        uxx += s.dx[k] * f.ux(n);
        uxy += s.dy[k] * f.ux(n);
        uyx += s.dx[k] * f.uy(n);
        uyy += s.dy[k] * f.uy(n);
        uzx += s.dx[k] * f.uz(n);
        uzy += s.dy[k] * f.uz(n);
      }
      for (int k = 0; k < 3; ++k) y += q.l(k) * xy[k].y();
      Eigen::Matrix<fem::cd, 6, 1> strain;
      strain << uxx, uyy, ib * uz, uzy + ib * uy, uzx + ib * ux, uyx + uxy;
      const Eigen::Vector2cd ez = zeta.at(y);
      const Eigen::Vector3cd field(0.0, ez(0), ez(1));
      const Eigen::Matrix<fem::cd, 6, 1> stress = et.cast<fem::cd>() * field;
      total += q.w * geo.area * strain.dot(stress);
    }
  }
  return total;
}

namespace {

double film_top(const fem::Mesh2D& mesh) {
  double top = -1e300;
  for (const auto& e : mesh.elements)
    if (e.region == fem::Region::waveguide)
      for (int k = 0; k < mesh.nodes_per_element(); ++k) top = std::max(top, mesh.nodes[e.nodes[k]].y());
  return top;
}

}  // namespace

CouplingResult coupling_strength(const QuantizedMode& q, const PeriodProjection& zeta, const TransmonParams& t,
                                 const fem::RegionMaterials& mats, int pairs) {
  if (pairs < 1) throw InputError("pair count must be >= 1");
  const double top = film_top(*q.field.mesh);
  if (std::abs(top - zeta.film_thickness()) > 1e-9 * zeta.film_thickness())
    throw InputError("IDT cell film does not match the waveguide film thickness");
  CouplingResult r;
  r.overlap = overlap_integral(q.field, mats, zeta);
  r.g_complex = -(q.xi / (2.0 * hbar)) * r.overlap * (4.0 * t.ec / elementary_charge) * t.n_zpf *
                static_cast<double>(pairs);
  r.g = std::abs(r.g_complex);
  r.period = zeta.period();
  r.pairs = pairs;
  return r;
}

FingerScaling scale_with_fingers(double g1, int pairs, double c_pair, double c_shunt) {
  if (pairs < 1) throw InputError("pair count must be >= 1");
  if (!(c_shunt > 0) || c_pair < 0) throw InputError("capacitances must be positive");
  FingerScaling s;
  s.g = pairs * g1;
  const double load = pairs * c_pair;
  if (load > 0.1 * c_shunt) {
    s.g *= std::sqrt(c_shunt / (c_shunt + load));
    s.loading_corrected = true;
  }
  return s;
}

// ---------------------------------------------------------------------------

ModeChoice parse_mode_choice(std::string_view s) {
  if (s == "quasi-Love" || s == "quasi_love" || s == "love") return ModeChoice::quasi_love;
  if (s == "quasi-Rayleigh" || s == "quasi_rayleigh" || s == "rayleigh") return ModeChoice::quasi_rayleigh;
  throw InputError("unknown mode '" + std::string(s) + "' (expected quasi-Love or quasi-Rayleigh)");
}

std::string_view to_string(ModeChoice c) { return c == ModeChoice::quasi_love ? "quasi-Love" : "quasi-Rayleigh"; }

const waveguide::GuidedMode& select_mode(const std::vector<waveguide::GuidedMode>& modes, ModeChoice c) {
  if (modes.empty()) throw SolverError("no bound mode at the requested frequency");
  const auto cmp = [](const waveguide::GuidedMode& a, const waveguide::GuidedMode& b) {
    return a.cls.f_sh < b.cls.f_sh;
  };
  return c == ModeChoice::quasi_love ? *std::max_element(modes.begin(), modes.end(), cmp)
                                     : *std::min_element(modes.begin(), modes.end(), cmp);
}

namespace {

idt::IdtDesign design(const CouplingSettings& s, double period, double eta) {
  idt::IdtDesign d;
  d.period = period;
  d.eta = eta;
  d.pairs = s.pairs;
  d.metal_thickness = s.metal_thickness;
  d.metal = s.metal;
  return d;
}

struct Evaluated {
  SweepPoint point;
  waveguide::GuidedMode mode;
};

CouplingResult evaluate_g(const CouplingSettings& s, const fem::RegionMaterials& mats,
                          const waveguide::GuidedMode& m, double period, double eta) {
  const auto cell = idt::solve_idt_cell(design(s, period, eta), s.geometry.thickness, mats, s.cell_density);
  const PeriodProjection zeta(cell, m.beta, s.z_samples);
  const auto q = normalize_mode(m.field, mats, s.radius);
  return coupling_strength(q, zeta, s.transmon, mats, s.pairs);
}

// Signs g relative to the phase at max |g|; `carried` holds phase-carried values.
void assign_signs(CouplingSweep& r) {
  std::size_t best = 0;
  for (std::size_t i = 0; i < r.points.size(); ++i)
    if (std::abs(r.points[i].g_complex) > std::abs(r.points[best].g_complex)) best = i;
  r.reference_phase = r.points.empty() ? 0.0 : std::arg(r.points[best].g_complex);
  const auto ref = std::polar(1.0, -r.reference_phase);
  for (auto& p : r.points) p.g = (p.g_complex * ref).real();
}

}  // namespace

CouplingSweep coupling_vs_angle(const CouplingSettings& s, const std::vector<double>& phis, ModeChoice c) {
  if (phis.empty()) throw InputError("angle grid is empty");
  CouplingSweep r;
  r.mode = c;
  {
    const waveguide::ModeSolver ref(s.geometry, s.stack.at(0.0), s.solver);
    r.reference_period = idt::resonance_period(select_mode(ref.modes_at_frequency(s.f0), c));
  }
  const double beta_ref = two_pi / r.reference_period;
  std::vector<Evaluated> ev(phis.size());
  waveguide::parallel_for(phis.size(), s.workers, [&](std::size_t i) {
    const auto mats = s.stack.at(phis[i]);
    const waveguide::ModeSolver solver(s.geometry, mats, s.solver);
    const auto bound = solver.modes_at_frequency(s.f0);
    const auto& m = select_mode(bound, c);
    auto& p = ev[i].point;
    p.param = phis[i];
    p.beta = m.beta;
    p.f_sh = m.cls.f_sh;
    p.period = idt::resonance_period(m);
    // Resonance of the phi = 0 design here: the same branch at the reference beta.
    double best = -1.0;
    for (const auto& x : solver.modes_at_beta(beta_ref, m.branch + 3)) {
      const double o = waveguide::mode_overlap(x.field, m.field, mats);
      if (o > best) {
        best = o;
        p.f_res = x.omega / two_pi;
      }
    }
    const auto g = evaluate_g(s, mats, m, p.period, s.eta);
    p.g_complex = g.g_complex;
    ev[i].mode = m;
  });
  // Carry the field phase along the grid so that g's phase is comparable.
  std::complex<double> carried = 1.0;
  for (std::size_t i = 0; i < ev.size(); ++i) {
    if (i > 0) {
      auto prev = ev[i - 1].mode.field;
      prev.mesh = ev[i].mode.field.mesh;
      const std::complex<double> raw = fem::mass_products(prev, ev[i].mode.field, s.stack.at(phis[i])).sum();
      const std::complex<double> p = std::conj(carried) * raw;
      if (std::abs(p) > 0) carried = std::conj(p) / std::abs(p);
    }
    // g is antilinear in the field: rephasing u by c multiplies g by conj(c).
    ev[i].point.g_complex *= std::conj(carried);
    r.points.push_back(ev[i].point);
  }
  assign_signs(r);
  return r;
}

CouplingSweep coupling_vs_duty(const CouplingSettings& s, const std::vector<double>& etas, ModeChoice c) {
  if (etas.empty()) throw InputError("duty grid is empty");
  for (double e : etas)
    if (!(e > 0 && e < 1)) throw InputError("duty ratios must lie in (0, 1)");
  CouplingSweep r;
  r.mode = c;
  const auto mats = s.stack.at(0.0);
  const waveguide::ModeSolver solver(s.geometry, mats, s.solver);
  const auto m = select_mode(solver.modes_at_frequency(s.f0), c);
  r.reference_period = idt::resonance_period(m);
  idt::ShiftOptions opt;
  opt.shorting = s.shorting;
  if (s.shorting) opt.keff2 = idt::shorted_surface_keff2(solver, m);
  r.points.resize(etas.size());
  waveguide::parallel_for(etas.size(), s.workers, [&](std::size_t i) {
    auto& p = r.points[i];
    p.param = etas[i];
    p.beta = m.beta;
    p.f_sh = m.cls.f_sh;
    const auto shift = idt::duty_cycle_shift(design(s, r.reference_period, etas[i]), solver, m, opt);
    p.mass_shift = shift.mass;
    p.shorting_shift = shift.shorting;
    p.f_res = shift.f0 + shift.total();
    // f scales as 1/b at fixed loaded velocity.
    p.period = r.reference_period * p.f_res / s.f0;
    p.g_complex = evaluate_g(s, mats, m, p.period, etas[i]).g_complex;
  });
  assign_signs(r);
  return r;
}

namespace {

std::string sweep_csv(const CouplingSweep& r, const char* head, double scale) {
  std::ostringstream os;
  os << head << ",period_nm,f_res_GHz,g_over_2pi_Hz,abs_g_over_2pi_Hz\n";
  char buf[200];
  for (const auto& p : r.points) {
    std::snprintf(buf, sizeof buf, "%.9g,%.6f,%.9f,%.6g,%.6g\n", p.param * scale, p.period * 1e9, p.f_res * 1e-9,
                  p.g / two_pi, std::abs(p.g_complex) / two_pi);
    os << buf;
  }
  return os.str();
}

}  // namespace

std::string angle_csv(const CouplingSweep& r) { return sweep_csv(r, "phi_deg", 180.0 / constants::pi); }
std::string duty_csv(const CouplingSweep& r) { return sweep_csv(r, "eta", 1.0); }

}  // namespace qad::coupling
