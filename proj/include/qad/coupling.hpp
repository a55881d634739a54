#pragma once

#include "qad/fem.hpp"
#include "qad/idt.hpp"
#include "qad/waveguide.hpp"

#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace qad::coupling {

struct TransmonParams {
  double ej = 0.0;  // J
  double ec = 0.0;  // J
  double f01 = 0.0;  // Hz
  double n_zpf = 0.0;

  double ratio() const { return ej / ec; }
  /// Total shunt capacitance implied by E_c = e^2 / 2C.
  double shunt_capacitance() const;
};

/// E_c = h * 200 MHz.
double default_charging_energy();

/// E_J = (h f01 + E_c)^2 / (8 E_c). Throws RegimeError below E_J/E_c = 30.
TransmonParams transmon_from_target(double f01, double ec = default_charging_energy());

// ---------------------------------------------------------------------------

struct QuantizedMode {
  double xi = 0.0;           // 1 / field amplitude unit
  double omega = 0.0;        // rad/s
  double radius = 0.0;       // m
  double denominator = 0.0;  // J (field units squared)
  long azimuthal_index = 0;  // m = round(beta R)
  fem::FieldSolution field;
};

/// int_V [rho v v* + S T* + E D*] dV with V = cross-section x 2 pi R.
double normalization_denominator(const fem::FieldSolution& f, const fem::RegionMaterials& mats, double radius);

/// Throws InputError for R <= 0 or a zero-energy field.
QuantizedMode normalize_mode(const fem::FieldSolution& f, const fem::RegionMaterials& mats, double radius);

/// Cell field of a 1 V biased finger pair projected on the travelling wave:
/// (E_y, E_z)(y) = int_0^b E(y, z) e^{-i beta z} dz, in V per volt of bias.
class PeriodProjection {
 public:
  PeriodProjection(const idt::IdtCell& cell, double beta, int samples = 256);

  /// Zero above the film top or below the cell.
  Eigen::Vector2cd at(double y) const;
  double beta() const noexcept { return beta_; }
  double period() const noexcept { return period_; }
  double film_thickness() const noexcept { return film_; }

 private:
  fem::ScalarSampler sampler_;
  double beta_, period_, film_;
  int samples_;
  mutable std::vector<std::pair<double, Eigen::Vector2cd>> cache_;
};

/// int S^H e^T zeta dV over piezoelectric regions of the waveguide mesh, for
/// one period along z (J per volt per field unit).
std::complex<double> overlap_integral(const fem::FieldSolution& f, const fem::RegionMaterials& mats,
                                      const PeriodProjection& zeta);

struct CouplingResult {
  std::complex<double> g_complex;  // rad/s, phase follows the field convention
  double g = 0.0;                  // rad/s; |g| for a single point, signed within sweeps
  std::complex<double> overlap;
  double phi = 0.0;
  double period = 0.0;
  int pairs = 1;
};

/// g = -(xi / 2 hbar) * overlap * (4 E_c / e) * n_zpf * pairs. Throws InputError
/// when the cell film does not match the waveguide film.
CouplingResult coupling_strength(const QuantizedMode& q, const PeriodProjection& zeta, const TransmonParams& t,
                                 const fem::RegionMaterials& mats, int pairs = 1);

struct FingerScaling {
  double g = 0.0;
  bool loading_corrected = false;
};

/// N g1, with the sqrt(C_shunt / (C_shunt + N C_pair)) correction once
/// N C_pair exceeds a tenth of C_shunt.
FingerScaling scale_with_fingers(double g1, int pairs, double c_pair, double c_shunt);

// ---------------------------------------------------------------------------
// Sweeps

enum class ModeChoice { quasi_love, quasi_rayleigh };
ModeChoice parse_mode_choice(std::string_view s);
std::string_view to_string(ModeChoice c);

/// Most shear-horizontal (quasi-Love) or most sagittal (quasi-Rayleigh) bound
/// mode. Throws SolverError when none exists.
const waveguide::GuidedMode& select_mode(const std::vector<waveguide::GuidedMode>& modes, ModeChoice c);

struct CouplingSettings {
  fem::RidgeGeometry geometry;
  waveguide::Stack stack;
  waveguide::SolverSettings solver;
  double f0 = 6e9;
  double radius = 50e-6;
  double eta = 0.5;
  double metal_thickness = 50e-9;
  std::string metal = "Al";
  int pairs = 1;
  TransmonParams transmon = transmon_from_target(6e9);
  int cell_density = 1;
  int z_samples = 256;
  int workers = 1;
  bool shorting = true;  // duty sweep: include the shorting term
};

struct SweepPoint {
  double param = 0.0;   // phi (rad) or eta
  double beta = 0.0;    // rad/m of the selected mode at f0
  double f_sh = 0.0;
  double period = 0.0;  // retuned so the IDT resonates at f0
  double f_res = 0.0;   // resonance of the reference design at this point
  std::complex<double> g_complex;
  double g = 0.0;       // signed, rad/s
  double mass_shift = 0.0;
  double shorting_shift = 0.0;
};

struct CouplingSweep {
  ModeChoice mode = ModeChoice::quasi_love;
  double reference_period = 0.0;  // design period at phi = 0 (or of the duty sweep)
  double reference_phase = 0.0;   // phase mapped to positive g
  std::vector<SweepPoint> points;
};

/// g and retuned period around the ring. Field phases are carried from point to
/// point by maximising the overlap, and g is signed relative to the phase at max |g|.
CouplingSweep coupling_vs_angle(const CouplingSettings& s, const std::vector<double>& phis, ModeChoice c);

/// g versus duty ratio at the first azimuth of the settings (phi = 0), with the
/// period retuned to cancel the perturbative frequency shift.
CouplingSweep coupling_vs_duty(const CouplingSettings& s, const std::vector<double>& etas, ModeChoice c);

/// Columns phi_deg,period_nm,f_res_GHz,g_over_2pi_Hz,abs_g_over_2pi_Hz.
std::string angle_csv(const CouplingSweep& r);
/// Columns eta,period_nm,f_res_GHz,g_over_2pi_Hz,abs_g_over_2pi_Hz.
std::string duty_csv(const CouplingSweep& r);

}  // namespace qad::coupling
