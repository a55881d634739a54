#pragma once

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qad::materials {

using Matrix6d = Eigen::Matrix<double, 6, 6>;
using Matrix36d = Eigen::Matrix<double, 3, 6>;

/// Elastic stiffness in Voigt notation (Pa), engineering shear strains.
struct ElasticTensor {
  Matrix6d c = Matrix6d::Zero();
};

/// Piezoelectric stress constants e_{kJ} (C/m^2).
struct PiezoTensor {
  Matrix36d e = Matrix36d::Zero();
};

/// Permittivity (F/m).
struct PermittivityTensor {
  Eigen::Matrix3d eps = Eigen::Matrix3d::Zero();
};

/// Reference bulk velocities used by the database self-check.
struct VelocityReference {
  double vl = 0.0;
  double vt = 0.0;
  Eigen::Vector3d vl_direction = Eigen::Vector3d::UnitX();
  Eigen::Vector3d vt_direction = Eigen::Vector3d::UnitX();
  double tolerance = 0.05;
};

struct MaterialRecord {
  std::string name;
  double density = 0.0;  // kg/m^3
  ElasticTensor stiffness;
  PiezoTensor piezo;
  PermittivityTensor permittivity;
  bool piezoelectric = false;
  std::string source;
  std::optional<VelocityReference> reference;
};

/// Checks the record invariants (density, symmetry, definiteness, zero piezo
/// tensor for non-piezoelectric records). Throws InputError on violation.
void validate(const MaterialRecord& m);

/// Isotropic record from Lame constants.
MaterialRecord isotropic(std::string name, double density, double lambda, double mu,
                         double relative_permittivity = 1.0);

// ---------------------------------------------------------------------------
// Orientation

/// Orthogonal matrix A mapping crystal-frame components to device-frame
/// components (v_device = A v_crystal). Rows are the device axes in crystal
/// coordinates. Device frame: x lateral, y surface normal, z propagation.
class Rotation {
 public:
  Rotation() = default;
  /// Throws InputError unless `a` is orthogonal with det +1 (tolerance 1e-12).
  explicit Rotation(const Eigen::Matrix3d& a);

  static Rotation identity() { return Rotation(); }
  /// Passive rotation of the coordinate frame by `angle` about a device axis (0=x,1=y,2=z).
  static Rotation about_axis(int axis, double angle);

  const Eigen::Matrix3d& matrix() const noexcept { return a_; }
  /// Composition: (then * first) applies `first`, then `then`.
  friend Rotation operator*(const Rotation& then, const Rotation& first);

 private:
  Eigen::Matrix3d a_ = Eigen::Matrix3d::Identity();
};

/// Crystal cut (ZXZ Euler angles) plus the azimuthal position along a
/// microring. The full transform is R_y(azimuth) * Euler(alpha, beta, gamma).
struct CrystalOrientation {
  std::array<double, 3> euler{0.0, 0.0, 0.0};  // radians
  double azimuth = 0.0;                        // radians

  Rotation rotation() const;

  /// X-cut, propagation along crystal Y at azimuth 0 (LN waveguide layer).
  static CrystalOrientation x_cut_y_propagating(double azimuth = 0.0);
  /// c-plane cut with propagation along crystal X at azimuth 0 (substrate).
  static CrystalOrientation c_plane(double azimuth = 0.0);
};

/// Euler(alpha, beta, gamma) = Rz(gamma) Rx(beta) Rz(alpha), passive rotations.
Rotation euler_zxz(double alpha, double beta, double gamma);

/// 6x6 Bond stress-transformation matrix for the rotation.
Matrix6d bond_matrix(const Eigen::Matrix3d& a);

MaterialRecord rotate_material(const MaterialRecord& m, const Rotation& r);
MaterialRecord rotate_material(const MaterialRecord& m, const CrystalOrientation& o);

// ---------------------------------------------------------------------------
// Bulk waves

/// 3x6 matrix L(n) with Gamma = L c L^T.
Eigen::Matrix<double, 3, 6> direction_operator(const Eigen::Vector3d& n);

/// Christoffel matrix (Pa), optionally piezoelectrically stiffened.
Eigen::Matrix3d christoffel_matrix(const MaterialRecord& m, const Eigen::Vector3d& n, bool stiffened);

/// Three bulk phase velocities (m/s) in ascending order. `n` must be a unit vector within 1e-9.
std::array<double, 3> christoffel_velocities(const MaterialRecord& m, const Eigen::Vector3d& n,
                                             bool stiffened = false);

/// Slowest bulk velocity over a deterministic direction grid covering the unit sphere.
double min_transverse_velocity(const MaterialRecord& m, bool stiffened = false, int polar_steps = 36,
                               int azimuth_steps = 72);

struct ConfinementReport {
  double v_waveguide = 0.0;
  double v_substrate = 0.0;
  bool confining = false;
};

ConfinementReport confinement_screen(const MaterialRecord& waveguide, const MaterialRecord& substrate);

// ---------------------------------------------------------------------------
// Database

/// Parses a database document (schema qadsim-materials/1). Throws InputError
/// naming the offending record/field when the document is malformed.
class MaterialDatabase {
 public:
  static MaterialDatabase parse(std::string_view json_text);
  static const MaterialDatabase& builtin();

  const MaterialRecord& lookup(std::string_view name) const;
  bool contains(std::string_view name) const;
  const std::vector<MaterialRecord>& records() const noexcept { return records_; }
  const std::string& constant_set() const noexcept { return constant_set_; }

 private:
  std::vector<MaterialRecord> records_;
  std::string constant_set_;
};

/// Lookup in the built-in database. Throws UnknownMaterialError.
const MaterialRecord& lookup_material(std::string_view name);

struct ValidationRow {
  std::string material;
  double vl_computed = 0.0;
  double vt_computed = 0.0;
  double vl_reference = 0.0;
  double vt_reference = 0.0;
  double vl_error = 0.0;  // relative
  double vt_error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// Compares unstiffened Christoffel velocities with each record's reference values.
std::vector<ValidationRow> validate_reference_velocities(const MaterialDatabase& db);

}  // namespace qad::materials
