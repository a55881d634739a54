#pragma once

#include "qad/eigensolver.hpp"
#include "qad/fem.hpp"
#include "qad/materials.hpp"
#include "qad/mesher.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qad::waveguide {

enum class Polarization { quasi_love, quasi_rayleigh, hybrid };
std::string_view to_string(Polarization p);

struct ModeClassification {
  double f_sh = 0.0;        // lateral (x) share of the kinetic energy
  double f_sagittal = 0.0;  // y + z share
  Polarization label = Polarization::hybrid;
};

/// Throws InputError for an all-zero field.
ModeClassification classify_mode(const fem::FieldSolution& sol, const fem::RegionMaterials& mats,
                                 double threshold = 0.6);

/// (kinetic + strain) energy in `region` over the total.
double confinement_factor(const fem::FieldSolution& sol, const fem::RegionMaterials& mats, fem::Region region);

/// |<a, M b>| / sqrt(<a, M a><b, M b>) with the mass of `b`'s mesh; the
/// fields must share node numbering.
double mode_overlap(const fem::FieldSolution& a, const fem::FieldSolution& b, const fem::RegionMaterials& mats);

// ---------------------------------------------------------------------------

/// Film-on-substrate stack. Both crystals turn together with the ring azimuth.
struct Stack {
  materials::MaterialRecord waveguide = materials::lookup_material("LiNbO3");
  materials::MaterialRecord substrate = materials::lookup_material("Sapphire");
  materials::CrystalOrientation waveguide_cut = materials::CrystalOrientation::x_cut_y_propagating();
  materials::CrystalOrientation substrate_cut = materials::CrystalOrientation::c_plane();

  /// Device-frame records at ring azimuth `phi` (radians).
  fem::RegionMaterials at(double phi) const;
};

struct SolverSettings {
  int mesh_level = 1;
  int order = 2;
  double confinement_threshold = 0.8;
  double beta_tolerance = 1e-4;  // relative, on the fixed-frequency root
  double classification_threshold = 0.6;
  double boundary_flag = 0.01;  // boundary-adjacent energy share flagged as unconverged domain
  int max_candidates = 12;
};

/// Slowest substrate radiation phase velocity along z: min over bulk
/// directions n (n_z > 0) of v_slow(n) / n_z.
double radiation_cutoff_velocity(const materials::MaterialRecord& substrate_device_frame);

struct GuidedMode {
  fem::FieldSolution field;  // M-normalised, phase fixed
  double beta = 0.0;
  double omega = 0.0;
  ModeClassification cls;
  double confinement = 0.0;
  double boundary_fraction = 0.0;
  bool unconverged_domain = false;
  bool guided = false;
  int branch = 0;  // sorted eigenvalue index at fixed beta

  double phase_velocity() const { return omega / beta; }
};

/// Cross-section eigenproblem for one geometry and material set.
class ModeSolver {
 public:
  ModeSolver(const fem::RidgeGeometry& g, fem::RegionMaterials mats, const SolverSettings& s,
             const fem::RidgeMeshCounts& counts);
  ModeSolver(const fem::RidgeGeometry& g, fem::RegionMaterials mats, const SolverSettings& s = {});

  const fem::GuidedProblem& problem() const noexcept { return *problem_; }
  const fem::RegionMaterials& materials() const noexcept { return problem_->materials(); }
  const fem::RidgeGeometry& geometry() const noexcept { return geometry_; }
  const SolverSettings& settings() const noexcept { return settings_; }

  /// Lowest `count` modes at fixed beta, ascending in omega.
  std::vector<GuidedMode> modes_at_beta(double beta, int count, fem::EigenDiagnostics* diag = nullptr) const;

  /// Bound modes: branches reaching omega0 at some beta above the substrate
  /// radiation line, descending beta, `guided` set by the confinement threshold.
  std::vector<GuidedMode> modes_at_frequency(double f0) const;
  /// Only the guided ones, ordered by descending beta.
  std::vector<GuidedMode> guided_modes(double f0) const;

  double cutoff_velocity() const noexcept { return v_cut_; }
  double slowest_waveguide_velocity() const noexcept { return v_slow_; }

 private:
  fem::RidgeGeometry geometry_;
  SolverSettings settings_;
  std::shared_ptr<const fem::GuidedProblem> problem_;
  double v_cut_ = 0.0;
  double v_slow_ = 0.0;
};

// ---------------------------------------------------------------------------
// Sweeps

struct TrackPoint {
  std::size_t grid_index = 0;
  double param = 0.0;
  double beta = 0.0;
  double omega = 0.0;
  double f_sh = 0.0;
  double confinement = 0.0;
  Polarization label = Polarization::hybrid;
};

struct DispersionCurve {
  int track = 0;
  std::vector<TrackPoint> points;
};

struct AvoidedCrossing {
  int track_a = 0;
  int track_b = 0;
  std::size_t grid_index = 0;
  double param = 0.0;
  double relative_gap = 0.0;
};

struct SweepResult {
  std::vector<double> grid;
  std::vector<DispersionCurve> tracks;
  std::vector<AvoidedCrossing> crossings;
  /// Bound modes per grid point (descending beta), kept for downstream use.
  std::vector<std::vector<GuidedMode>> modes;
  /// Number of guided (confinement above threshold) modes per grid point.
  std::vector<int> guided_count;
};

struct SweepOptions {
  SolverSettings solver;
  double crossing_gap = 0.05;  // relative beta gap between neighbouring tracks
  double mixing_low = 0.35;
  double mixing_high = 0.65;
  double overlap_min = 0.5;
  int workers = 1;
  bool keep_fields = true;
  bool guided_only = false;  // track only modes above the confinement threshold
};

/// Runs fn(i) for i in [0, n) on `workers` threads; results are stored by index.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

/// Bound modes at f0 for each width (ascending). Meshes share topology.
SweepResult width_sweep(const fem::RidgeGeometry& base, const std::vector<double>& widths, double f0,
                        const Stack& stack, const SweepOptions& opt = {});

/// Bound modes at f0 for each ring azimuth (radians) with rotated tensors.
SweepResult azimuthal_sweep(const fem::RidgeGeometry& g, const std::vector<double>& phis, double f0,
                            const Stack& stack, const SweepOptions& opt = {});

/// Links per-point mode lists into tracks and flags avoided crossings
/// (exposed for tests; the sweeps call it).
void assemble_tracks(SweepResult& r, const fem::RegionMaterials& mats, const SweepOptions& opt);

/// CSV: track,param,beta,omega,f_SH,confinement,label (frozen column order).
std::string tracks_csv(const SweepResult& r, std::string_view param_name);

}  // namespace qad::waveguide
