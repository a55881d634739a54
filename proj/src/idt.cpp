#include "qad/idt.hpp"

#include "qad/constants.hpp"
#include "qad/eigensolver.hpp"
#include "qad/errors.hpp"
#include "qad/materials.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>

namespace qad::idt {

using constants::pi;
using constants::two_pi;

void IdtDesign::validate() const {
  if (!(period > 0)) throw InputError("idt.period must be positive");
  if (!(eta > 0 && eta < 1)) throw InputError("idt.eta must lie in (0, 1)");
  if (pairs < 1) throw InputError("idt.pairs must be >= 1");
  if (!(metal_thickness > 0)) throw InputError("idt.metal_thickness must be positive");
}

double resonance_period(double beta) {
  if (!(beta > 0) || !std::isfinite(beta)) throw InputError("mode is cut off at the requested frequency");
  return two_pi / beta;
}

double resonance_period(const waveguide::GuidedMode& m) { return resonance_period(m.beta); }

double keff_from_resonances(double fs, double fp) {
  if (!(fs > 0) || !(fp > 0)) throw InputError("resonance frequencies must be positive");
  if (fs > fp) throw InputError("series resonance above parallel resonance");
  return 0.25 * pi * pi * (1.0 - fs / fp);
}

double resonance_ratio(double keff2) {
  if (!(keff2 >= 0) || keff2 >= 0.25 * pi * pi) throw InputError("k_eff^2 must lie in [0, pi^2/4)");
  return 1.0 - 4.0 * keff2 / (pi * pi);
}

double bandwidth_3db(double f0, int pairs) {
  if (pairs < 1) throw InputError("pair count must be >= 1");
  return 0.885 * f0 / pairs;
}

// ---------------------------------------------------------------------------

double BvdParams::fs() const { return 1.0 / (two_pi * std::sqrt(lm * cm)); }
double BvdParams::fp() const { return fs() * std::sqrt(1.0 + cm / c0); }

std::complex<double> BvdParams::impedance(double f) const {
  const double w = two_pi * f;
  const std::complex<double> i(0, 1);
  const auto zm = rm + i * w * lm + 1.0 / (i * w * cm);
  return 1.0 / (i * w * c0 + 1.0 / zm);
}

BvdParams bvd_from_coupling(double c0, double keff2, double fs, double q) {
  if (!(c0 > 0)) throw InputError("C0 must be positive");
  if (!(fs > 0)) throw InputError("series resonance must be positive");
  if (!(q > 0)) throw InputError("quality factor must be positive");
  if (!(keff2 > 0)) throw InputError("k_eff^2 must be positive for a motional branch");
  const double fp = fs / resonance_ratio(keff2);
  BvdParams p;
  p.c0 = c0;
  p.cm = c0 * ((fp / fs) * (fp / fs) - 1.0);
  const double ws = two_pi * fs;
  p.lm = 1.0 / (ws * ws * p.cm);
  p.rm = std::isinf(q) ? 0.0 : ws * p.lm / q;
  return p;
}

ImpedanceCurve bvd_impedance(const BvdParams& p, const std::vector<double>& f) {
  ImpedanceCurve c;
  c.f = f;
  c.z.reserve(f.size());
  for (double x : f) c.z.push_back(p.impedance(x));
  return c;
}

namespace {

// Vertex of the parabola through (i-1, i, i+1) of log|Z|, kept within one step.
double refine(const ImpedanceCurve& c, std::size_t i) {
  const double y0 = std::log(std::abs(c.z[i - 1])), y1 = std::log(std::abs(c.z[i])),
               y2 = std::log(std::abs(c.z[i + 1]));
  const double den = y0 - 2 * y1 + y2;
  if (den == 0 || !std::isfinite(den)) return c.f[i];
  const double t = std::clamp(0.5 * (y0 - y2) / den, -1.0, 1.0);
  return t < 0 ? c.f[i] + t * (c.f[i] - c.f[i - 1]) : c.f[i] + t * (c.f[i + 1] - c.f[i]);
}

}  // namespace

Resonances find_resonances(const ImpedanceCurve& c) {
  if (c.f.size() < 3 || c.f.size() != c.z.size()) throw InputError("impedance curve needs at least 3 points");
  std::size_t lo = 0, hi = 0;
  for (std::size_t i = 1; i < c.z.size(); ++i) {
    if (std::abs(c.z[i]) < std::abs(c.z[lo])) lo = i;
    if (std::abs(c.z[i]) > std::abs(c.z[hi])) hi = i;
  }
  if (lo == 0 || hi == 0 || lo + 1 == c.z.size() || hi + 1 == c.z.size())
    throw InputError("impedance extrema lie on the edge of the frequency grid");
  return {refine(c, lo), refine(c, hi)};
}

std::string impedance_csv(const ImpedanceCurve& c) {
  std::ostringstream os;
  os << "f_Hz,re_Z_ohm,im_Z_ohm,abs_Z_ohm\n";
  char buf[160];
  for (std::size_t i = 0; i < c.f.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g,%.9g\n", c.f[i], c.z[i].real(), c.z[i].imag(), std::abs(c.z[i]));
    os << buf;
  }
  return os.str();
}

// ---------------------------------------------------------------------------

namespace {

// Device axes (z, y) mapped to the cell's mesh axes (x, y).
Eigen::Matrix2d sagittal(const Eigen::Matrix3d& eps) {
  Eigen::Matrix2d m;
  m << eps(2, 2), eps(2, 1), eps(1, 2), eps(1, 1);
  return m;
}

}  // namespace

IdtCell solve_idt_cell(const IdtDesign& d, double film_thickness, const fem::RegionMaterials& mats, int density) {
  d.validate();
  if (!mats.waveguide || !mats.substrate) throw InputError("IDT cell needs film and substrate materials");
  IdtCell c;
  c.geometry.period = d.period;
  c.geometry.finger_width = d.finger_width();
  c.geometry.metal_thickness = d.metal_thickness;
  c.geometry.film_thickness = film_thickness;
  c.geometry.density = density;
  auto mesh = std::make_shared<const fem::Mesh2D>(fem::build_idt_cell_mesh(c.geometry));
  fem::PermittivityMap eps;
  eps[fem::Region::waveguide] = sagittal(mats.waveguide->permittivity.eps);
  eps[fem::Region::substrate] = sagittal(mats.substrate->permittivity.eps);
  c.field = fem::solve_electrostatic(std::move(mesh), eps, 1.0, 0.0);
  c.capacitance_per_length = c.field.capacitance;
  return c;
}

double pair_capacitance(const IdtCell& cell, double aperture) {
  if (!(aperture > 0)) throw InputError("aperture must be positive");
  return cell.capacitance_per_length * aperture;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<const fem::BoundaryEdge*> top_edges(const waveguide::ModeSolver& s) {
  const auto& g = s.geometry();
  const auto& mesh = s.problem().mesh();
  const double tol = 1e-9 * g.thickness;
  std::vector<const fem::BoundaryEdge*> out;
  for (const auto& e : mesh.boundary) {
    if (e.tag != fem::BoundaryTag::free_surface) continue;
    bool on_top = true;
    for (int k = 0; k < mesh.nodes_per_edge(); ++k) {
      const auto& p = mesh.nodes[e.nodes[k]];
      on_top = on_top && std::abs(p.y() - g.thickness) < tol && std::abs(p.x()) <= 0.5 * g.width + tol;
    }
    if (on_top) out.push_back(&e);
  }
  if (out.empty()) throw InputError("ridge mesh has no top surface");
  return out;
}

}  // namespace

std::vector<int> top_surface_nodes(const waveguide::ModeSolver& s) {
  std::set<int> nodes;
  for (const auto* e : top_edges(s))
    for (int k = 0; k < s.problem().mesh().nodes_per_edge(); ++k) nodes.insert(e->nodes[k]);
  return {nodes.begin(), nodes.end()};
}

double top_surface_weight(const waveguide::ModeSolver& s, const waveguide::GuidedMode& m) {
  const auto& mesh = s.problem().mesh();
  const auto& f = m.field;
  // 3-point Gauss on each edge; quadratic edges store (end, end, mid).
  const double gp[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
  const double gw[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  double top = 0.0;
  for (const auto* e : top_edges(s)) {
    const auto& a = mesh.nodes[e->nodes[0]];
    const auto& b = mesh.nodes[e->nodes[1]];
    const double half = 0.5 * (b - a).norm();
    for (int q = 0; q < 3; ++q) {
      const double t = gp[q];
      double n[3];
      int nn = 2;
      if (mesh.order() == 2) {
        n[0] = 0.5 * t * (t - 1);
        n[1] = 0.5 * t * (t + 1);
        n[2] = 1 - t * t;
        nn = 3;
      } else {
        n[0] = 0.5 * (1 - t);
        n[1] = 0.5 * (1 + t);
      }
      fem::cd ux = 0, uy = 0, uz = 0;
      for (int k = 0; k < nn; ++k) {
        ux += n[k] * f.ux(e->nodes[k]);
        uy += n[k] * f.uy(e->nodes[k]);
        uz += n[k] * f.uz(e->nodes[k]);
      }
      top += gw[q] * half * (std::norm(ux) + std::norm(uy) + std::norm(uz));
    }
  }
  const double mass = fem::mass_products(f, f, s.materials()).sum().real();
  if (!(mass > 0)) throw InputError("zero mode field");
  return top / mass;
}

double shorted_surface_keff2(const waveguide::ModeSolver& s, const waveguide::GuidedMode& m) {
  if (!s.problem().has_potential()) return 0.0;
  fem::GuidedProblem shorted(s.problem().mesh_ptr(), s.materials(), top_surface_nodes(s));
  const auto mats = fem::assemble_guided(shorted, m.beta);
  fem::EigenOptions opt;
  opt.count = m.branch + 3;
  const auto sols = fem::solve_guided_modes(shorted, mats, opt);
  double best = -1.0, omega = 0.0;
  for (const auto& x : sols) {
    const double o = waveguide::mode_overlap(x.field, m.field, s.materials());
    if (o > best) {
      best = o;
      omega = x.omega;
    }
  }
  return std::max(0.0, 2.0 * (m.omega - omega) / m.omega);
}

DutyShift duty_cycle_shift(const IdtDesign& d, const waveguide::ModeSolver& s, const waveguide::GuidedMode& m,
                           const ShiftOptions& opt) {
  d.validate();
  if (d.metal_thickness > 0.5 * s.geometry().thickness)
    throw InputError("metal thickness exceeds half the film thickness; perturbative estimate refused");
  const auto& metal = materials::lookup_material(d.metal);
  DutyShift r;
  r.f0 = m.omega / two_pi;
  r.mass = -0.5 * metal.density * d.metal_thickness * d.eta * top_surface_weight(s, m) * r.f0;
  if (opt.shorting) {
    r.keff2 = opt.keff2 >= 0 ? opt.keff2 : shorted_surface_keff2(s, m);
    r.shorting = -0.5 * r.keff2 * d.eta * r.f0;
  }
  return r;
}

}  // namespace qad::idt
