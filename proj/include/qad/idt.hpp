#pragma once

#include "qad/electrostatics.hpp"
#include "qad/fem.hpp"
#include "qad/mesher.hpp"
#include "qad/waveguide.hpp"

#include <complex>
#include <string>
#include <vector>

namespace qad::idt {

/// Single-electrode IDT: two fingers (+, -) per period b. The duty ratio is
/// the metallised fraction of the period, so each finger is eta*b/2 wide.
struct IdtDesign {
  double period = 730e-9;  // b, one acoustic wavelength
  double eta = 0.5;
  int pairs = 1;
  double metal_thickness = 50e-9;
  std::string metal = "Al";

  double finger_width() const { return 0.5 * eta * period; }
  /// Throws InputError unless 0 < eta < 1, period > 0, pairs >= 1, thickness > 0.
  void validate() const;
};

/// b = 2 pi / beta. Throws InputError for beta <= 0 (mode cut off at f0).
double resonance_period(double beta);
double resonance_period(const waveguide::GuidedMode& m);

double keff_from_resonances(double fs, double fp);
/// Inverse of keff_from_resonances: fs / fp for a given k_eff^2 in [0, pi^2/4).
double resonance_ratio(double keff2);

double bandwidth_3db(double f0, int pairs);

/// Butterworth-Van Dyke circuit: C0 parallel to series Rm-Lm-Cm.
struct BvdParams {
  double c0 = 0.0;
  double cm = 0.0;
  double lm = 0.0;
  double rm = 0.0;

  double fs() const;
  double fp() const;
  std::complex<double> impedance(double f) const;
};

/// Synthesises the circuit from (C0, k_eff^2, f_s, Q); Q = inf gives Rm = 0.
BvdParams bvd_from_coupling(double c0, double keff2, double fs, double q);

struct ImpedanceCurve {
  std::vector<double> f;
  std::vector<std::complex<double>> z;
};

ImpedanceCurve bvd_impedance(const BvdParams& p, const std::vector<double>& f);

struct Resonances {
  double fs = 0.0;
  double fp = 0.0;
};

/// |Z| minimum / maximum, refined by a parabola through the neighbouring grid
/// points. Throws InputError when the extrema sit on the grid ends.
Resonances find_resonances(const ImpedanceCurve& c);

/// Columns f_Hz,re_Z_ohm,im_Z_ohm,abs_Z_ohm.
std::string impedance_csv(const ImpedanceCurve& c);

// ---------------------------------------------------------------------------
// Electrostatic finger-pair cell (sagittal plane, uniform across the ridge)

struct IdtCell {
  fem::IdtCellGeometry geometry;
  fem::ElectrostaticResult field;
  double capacitance_per_length = 0.0;  // F/m of finger overlap, one pair
};

/// `mats` are device-frame records; the film uses the waveguide record.
IdtCell solve_idt_cell(const IdtDesign& d, double film_thickness, const fem::RegionMaterials& mats,
                       int density = 1);

/// Capacitance of one finger pair whose fingers span `aperture`.
double pair_capacitance(const IdtCell& cell, double aperture);

// ---------------------------------------------------------------------------
// Duty-ratio frequency shift (first-order perturbation)

struct ShiftOptions {
  bool shorting = true;
  /// k_eff^2 for the shorting term; negative: estimate from the open/shorted
  /// surface velocity difference.
  double keff2 = -1.0;
};

struct DutyShift {
  double f0 = 0.0;             // Hz, unloaded resonance (mode frequency)
  double mass = 0.0;           // Hz
  double shorting = 0.0;       // Hz
  double keff2 = 0.0;          // used in the shorting term
  double total() const { return mass + shorting; }
};

/// Surface integral of |u|^2 over the top of the ridge divided by the mass-
/// weighted area integral, i.e. int_top |u|^2 dx / int rho |u|^2 dA.
double top_surface_weight(const waveguide::ModeSolver& s, const waveguide::GuidedMode& m);

/// Nodes on the top face of the ridge.
std::vector<int> top_surface_nodes(const waveguide::ModeSolver& s);

/// 2 (v_open - v_short) / v_open at the mode's beta, with the ridge top grounded.
double shorted_surface_keff2(const waveguide::ModeSolver& s, const waveguide::GuidedMode& m);

/// Throws InputError when the metal is thicker than half the film.
DutyShift duty_cycle_shift(const IdtDesign& d, const waveguide::ModeSolver& s, const waveguide::GuidedMode& m,
                           const ShiftOptions& opt = {});

}  // namespace qad::idt
