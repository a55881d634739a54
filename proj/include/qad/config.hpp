#pragma once

#include "qad/coupling.hpp"
#include "qad/errors.hpp"
#include "qad/qdynamics.hpp"
#include "qad/waveguide.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qad::config {

/// Malformed or invalid configuration. `where` is "line L, column C" for
/// syntax errors and the dotted field path for everything else.
class ConfigError : public InputError {
 public:
  ConfigError(std::string where, const std::string& what)
      : InputError(where.empty() ? what : where + ": " + what), where_(std::move(where)), message_(what) {}
  const std::string& where() const noexcept { return where_; }
  const std::string& message() const noexcept { return message_; }

 private:
  std::string where_, message_;
};

// All values are in the units named by the JSON keys (nm, um, GHz, MHz, deg, ns);
// the accessors below convert to SI.

struct GeometrySpec {
  double width_nm = 500;
  double thickness_nm = 200;
  double etch_depth_nm = 200;
  double substrate_depth_nm = 0;   // 0: automatic
  double substrate_margin_nm = 0;  // 0: automatic
  double ring_radius_um = 50;
  int mesh_density = 1;
};

struct MaterialSpec {
  std::string waveguide = "LiNbO3";
  std::string substrate = "Sapphire";
  std::array<double, 3> waveguide_euler_deg{180, 90, 90};  // X-cut, Y propagating
  std::array<double, 3> substrate_euler_deg{90, 90, 0};   // c-plane, X propagating
};

struct SweepSpec {
  std::vector<double> width_nm;
  std::vector<double> phi_deg;
  std::vector<double> eta;
};

struct IdtSpec {
  double eta = 0.5;
  int pairs = 1;
  std::string metal = "Al";
  double metal_thickness_nm = 50;
  double aperture_um = 20;
  double q_factor = 1000;
  double f_start_GHz = 5.5;
  double f_stop_GHz = 6.8;
  int points = 2601;
  int cell_density = 1;
  bool shorting = true;
};

struct TransmonSpec {
  double f01_GHz = 6.0;
  double ec_MHz = 200.0;  // E_c / h
};

struct DynamicsSpec {
  int n_q = 3;
  int n_ph = 3;
  std::optional<double> g_MHz;  // g / 2 pi; unset: computed from the device
  double kappa_MHz = 0.1;       // kappa / 2 pi
  double gamma_MHz = 0.1;
  double t_stop_ns = 400;
  int points = 401;
  std::string initial = "qubit-excited";
  bool rwa = false;
};

struct RunConfig {
  GeometrySpec geometry;
  MaterialSpec materials;
  double f0_GHz = 6.0;
  std::string mode = "quasi-Love";
  SweepSpec sweeps;
  IdtSpec idt;
  TransmonSpec transmon;
  DynamicsSpec dynamics;
  int workers = 0;  // 0: available parallelism
  std::string output_dir = "out";

  RunConfig();

  /// Throws ConfigError naming the first offending field.
  void validate() const;

  // SI views
  fem::RidgeGeometry ridge() const;
  waveguide::Stack stack() const;
  waveguide::SolverSettings solver() const;
  coupling::TransmonParams transmon_params() const;
  coupling::CouplingSettings coupling_settings() const;
  idt::IdtDesign idt_design(double period) const;
  double f0() const { return f0_GHz * 1e9; }
  double radius() const { return geometry.ring_radius_um * 1e-6; }
};

/// Parses the JSON document. Unknown keys are errors (they are usually typos).
RunConfig parse(std::string_view text);
RunConfig load(const std::string& path);

/// Full document, all defaults spelled out.
std::string to_json(const RunConfig& c);

/// FNV-1a 64-bit hash of the canonical physical content (output directory and
/// worker count excluded), as 16 hex digits.
std::string config_hash(const RunConfig& c);
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace qad::config
