#include "qad/materials.hpp"

#include "qad/constants.hpp"
#include "qad/errors.hpp"
#include "qad/material_data.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace qad::materials {

namespace {

constexpr double kGPa = 1e9;

bool is_symmetric(const Eigen::MatrixXd& m, double rel_tol) {
  const double scale = std::max(m.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

bool is_positive_definite(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() > 0.0;
}

}  // namespace

void validate(const MaterialRecord& m) {
  if (!(m.density > 0.0)) throw InputError("material '" + m.name + "': density must be positive");
  const auto& c = m.stiffness.c;
  if (!is_symmetric(c, 1e-12)) throw InputError("material '" + m.name + "': stiffness not symmetric");
  if (!is_positive_definite(c)) throw InputError("material '" + m.name + "': stiffness not positive definite");
  const auto& eps = m.permittivity.eps;
  if (!is_symmetric(eps, 1e-12) || !is_positive_definite(eps))
    throw InputError("material '" + m.name + "': permittivity not symmetric positive definite");
  if (!m.piezoelectric && m.piezo.e.cwiseAbs().maxCoeff() != 0.0)
    throw InputError("material '" + m.name + "': non-piezoelectric record with nonzero e");
}

MaterialRecord isotropic(std::string name, double density, double lambda, double mu,
                         double relative_permittivity) {
  MaterialRecord m;
  m.name = std::move(name);
  m.density = density;
  auto& c = m.stiffness.c;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) c(i, j) = lambda;
    c(i, i) = lambda + 2.0 * mu;
    c(i + 3, i + 3) = mu;
  }
  m.permittivity.eps = Eigen::Matrix3d::Identity() * relative_permittivity * constants::vacuum_permittivity;
  return m;
}

// ---------------------------------------------------------------------------

Rotation::Rotation(const Eigen::Matrix3d& a) : a_(a) {
  const double orth = (a * a.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (orth > 1e-12 || std::abs(a.determinant() - 1.0) > 1e-12)
    throw InputError("rotation matrix is not proper orthogonal");
}

Rotation Rotation::about_axis(int axis, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Eigen::Matrix3d a;
  switch (axis) {
    case 0: a << 1, 0, 0, 0, c, s, 0, -s, c; break;
    case 1: a << c, 0, -s, 0, 1, 0, s, 0, c; break;
    case 2: a << c, s, 0, -s, c, 0, 0, 0, 1; break;
    default: throw InputError("rotation axis must be 0, 1 or 2");
  }
  return Rotation(a);
}

Rotation operator*(const Rotation& then, const Rotation& first) {
  Rotation r;
  r.a_ = then.a_ * first.a_;
  return r;
}

Rotation euler_zxz(double alpha, double beta, double gamma) {
  return Rotation::about_axis(2, gamma) * Rotation::about_axis(0, beta) * Rotation::about_axis(2, alpha);
}

Rotation CrystalOrientation::rotation() const {
  return Rotation::about_axis(1, azimuth) * euler_zxz(euler[0], euler[1], euler[2]);
}

CrystalOrientation CrystalOrientation::x_cut_y_propagating(double azimuth) {
  return CrystalOrientation{{constants::pi, constants::pi / 2.0, constants::pi / 2.0}, azimuth};
}

CrystalOrientation CrystalOrientation::c_plane(double azimuth) {
  return CrystalOrientation{{constants::pi / 2.0, constants::pi / 2.0, 0.0}, azimuth};
}

Matrix6d bond_matrix(const Eigen::Matrix3d& a) {
  Matrix6d m;
  // Voigt index -> tensor index pairs.
  static constexpr int p[6] = {0, 1, 2, 1, 2, 0};
  static constexpr int q[6] = {0, 1, 2, 2, 0, 1};
  for (int I = 0; I < 6; ++I) {
    const int i = p[I], j = q[I];
    for (int K = 0; K < 6; ++K) {
      const int k = p[K], l = q[K];
      if (K < 3) {
        m(I, K) = a(i, k) * a(j, l);
      } else {
        m(I, K) = a(i, k) * a(j, l) + a(i, l) * a(j, k);
      }
    }
  }
  return m;
}

MaterialRecord rotate_material(const MaterialRecord& m, const Rotation& r) {
  const Eigen::Matrix3d& a = r.matrix();
  const Matrix6d bond = bond_matrix(a);
  MaterialRecord out = m;
  out.stiffness.c = bond * m.stiffness.c * bond.transpose();
  out.stiffness.c = 0.5 * (out.stiffness.c + out.stiffness.c.transpose()).eval();
  if (m.piezoelectric) out.piezo.e = a * m.piezo.e * bond.transpose();
  out.permittivity.eps = a * m.permittivity.eps * a.transpose();
  out.permittivity.eps = 0.5 * (out.permittivity.eps + out.permittivity.eps.transpose()).eval();
  out.reference.reset();
  return out;
}

MaterialRecord rotate_material(const MaterialRecord& m, const CrystalOrientation& o) {
  return rotate_material(m, o.rotation());
}

// ---------------------------------------------------------------------------

Eigen::Matrix<double, 3, 6> direction_operator(const Eigen::Vector3d& n) {
  Eigen::Matrix<double, 3, 6> l;
  l << n(0), 0, 0, 0, n(2), n(1),
       0, n(1), 0, n(2), 0, n(0),
       0, 0, n(2), n(1), n(0), 0;
  return l;
}

Eigen::Matrix3d christoffel_matrix(const MaterialRecord& m, const Eigen::Vector3d& n, bool stiffened) {
  const auto l = direction_operator(n);
  Eigen::Matrix3d gamma = l * m.stiffness.c * l.transpose();
  if (stiffened && m.piezoelectric) {
    const Eigen::Vector3d g = l * (m.piezo.e.transpose() * n);
    const double en = n.dot(m.permittivity.eps * n);
    gamma += g * g.transpose() / en;
  }
  return gamma;
}

std::array<double, 3> christoffel_velocities(const MaterialRecord& m, const Eigen::Vector3d& n,
                                             bool stiffened) {
  if (std::abs(n.norm() - 1.0) > 1e-9) throw InputError("propagation direction must be a unit vector");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(christoffel_matrix(m, n, stiffened), Eigen::EigenvaluesOnly);
  std::array<double, 3> v{};
  for (int i = 0; i < 3; ++i) v[i] = std::sqrt(std::max(es.eigenvalues()(i), 0.0) / m.density);
  return v;
}

double min_transverse_velocity(const MaterialRecord& m, bool stiffened, int polar_steps, int azimuth_steps) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= polar_steps; ++i) {
    const double theta = constants::pi * i / polar_steps;
    for (int j = 0; j < azimuth_steps; ++j) {
      const double phi = constants::two_pi * j / azimuth_steps;
      const Eigen::Vector3d n(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta));
      best = std::min(best, christoffel_velocities(m, n.normalized(), stiffened)[0]);
    }
  }
  return best;
}

ConfinementReport confinement_screen(const MaterialRecord& waveguide, const MaterialRecord& substrate) {
  ConfinementReport r;
  r.v_waveguide = min_transverse_velocity(waveguide);
  r.v_substrate = min_transverse_velocity(substrate);
  r.confining = r.v_waveguide < r.v_substrate;
  return r;
}

// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

double req(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_number())
    throw InputError("material database: " + where + ": missing numeric field '" + key + "'");
  return it->get<double>();
}

double opt(const json& obj, const char* key, double fallback) {
  auto it = obj.find(key);
  return (it != obj.end() && it->is_number()) ? it->get<double>() : fallback;
}

void fill_trigonal_stiffness(Matrix6d& c, const json& s, const std::string& where) {
  const double c11 = req(s, "c11", where), c12 = req(s, "c12", where), c13 = req(s, "c13", where);
  const double c14 = req(s, "c14", where), c33 = req(s, "c33", where), c44 = req(s, "c44", where);
  const double c66 = 0.5 * (c11 - c12);
  c << c11, c12, c13, c14, 0, 0,
       c12, c11, c13, -c14, 0, 0,
       c13, c13, c33, 0, 0, 0,
       c14, -c14, 0, c44, 0, 0,
       0, 0, 0, 0, c44, c14,
       0, 0, 0, 0, c14, c66;
}

void fill_hexagonal_stiffness(Matrix6d& c, const json& s, const std::string& where) {
  const double c11 = req(s, "c11", where), c12 = req(s, "c12", where), c13 = req(s, "c13", where);
  const double c33 = req(s, "c33", where), c44 = req(s, "c44", where);
  const double c66 = 0.5 * (c11 - c12);
  c << c11, c12, c13, 0, 0, 0,
       c12, c11, c13, 0, 0, 0,
       c13, c13, c33, 0, 0, 0,
       0, 0, 0, c44, 0, 0,
       0, 0, 0, 0, c44, 0,
       0, 0, 0, 0, 0, c66;
}

void fill_cubic_stiffness(Matrix6d& c, const json& s, const std::string& where) {
  const double c11 = req(s, "c11", where), c12 = req(s, "c12", where), c44 = req(s, "c44", where);
  c.setZero();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) c(i, j) = c12;
    c(i, i) = c11;
    c(i + 3, i + 3) = c44;
  }
}

Eigen::Vector3d direction(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 3) throw InputError("material database: " + where + ": direction must have 3 entries");
  Eigen::Vector3d d(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
  if (d.norm() == 0.0) throw InputError("material database: " + where + ": zero direction");
  return d.normalized();
}

MaterialRecord parse_record(const json& j, std::size_t index) {
  std::string where = "record " + std::to_string(index);
  if (!j.contains("name") || !j["name"].is_string()) throw InputError("material database: " + where + ": missing 'name'");
  MaterialRecord m;
  m.name = j["name"].get<std::string>();
  where = "record '" + m.name + "'";
  m.density = req(j, "density", where);
  m.source = j.value("source", std::string{});
  if (m.source.empty()) throw InputError("material database: " + where + ": missing 'source' citation");
  const std::string sym = j.value("symmetry", std::string{});
  if (!j.contains("stiffness")) throw InputError("material database: " + where + ": missing 'stiffness'");
  const json& s = j["stiffness"];
  const json empty = json::object();
  const json& pz = j.contains("piezo") ? j["piezo"] : empty;
  const json& pe = j.contains("permittivity") ? j["permittivity"] : empty;

  Matrix6d c = Matrix6d::Zero();
  Matrix36d e = Matrix36d::Zero();
  const double eps11 = req(pe, "eps11", where);
  const double eps33 = opt(pe, "eps33", eps11);

  if (sym == "trigonal_3m") {
    fill_trigonal_stiffness(c, s, where);
    const double e15 = req(pz, "e15", where), e22 = req(pz, "e22", where);
    const double e31 = req(pz, "e31", where), e33 = req(pz, "e33", where);
    e << 0, 0, 0, 0, e15, -e22,
        -e22, e22, 0, e15, 0, 0,
         e31, e31, e33, 0, 0, 0;
  } else if (sym == "trigonal_32") {
    fill_trigonal_stiffness(c, s, where);
    const double e11 = req(pz, "e11", where), e14 = req(pz, "e14", where);
    e << e11, -e11, 0, e14, 0, 0,
         0, 0, 0, 0, -e14, -e11,
         0, 0, 0, 0, 0, 0;
  } else if (sym == "trigonal_-3m") {
    fill_trigonal_stiffness(c, s, where);
  } else if (sym == "hexagonal_6mm") {
    fill_hexagonal_stiffness(c, s, where);
    const double e15 = req(pz, "e15", where), e31 = req(pz, "e31", where), e33 = req(pz, "e33", where);
    e << 0, 0, 0, 0, e15, 0,
         0, 0, 0, e15, 0, 0,
         e31, e31, e33, 0, 0, 0;
  } else if (sym == "cubic") {
    fill_cubic_stiffness(c, s, where);
  } else if (sym == "isotropic") {
    const double lambda = req(s, "lambda", where), mu = req(s, "mu", where);
    c = isotropic("", 1.0, lambda, mu).stiffness.c;
  } else {
    throw InputError("material database: " + where + ": unknown symmetry '" + sym + "'");
  }
  if (sym != "trigonal_3m" && sym != "trigonal_32" && sym != "hexagonal_6mm" && !pz.empty())
    throw InputError("material database: " + where + ": piezo constants given for a centrosymmetric class");

  m.stiffness.c = c * kGPa;
  m.piezo.e = e;
  m.piezoelectric = e.cwiseAbs().maxCoeff() > 0.0;
  m.permittivity.eps = Eigen::Vector3d(eps11, eps11, eps33).asDiagonal();
  m.permittivity.eps *= constants::vacuum_permittivity;

  if (j.contains("validation")) {
    const json& v = j["validation"];
    VelocityReference ref;
    ref.vl = req(v, "vl", where + " validation");
    ref.vt = req(v, "vt", where + " validation");
    ref.vl_direction = direction(v.at("vl_direction"), where);
    ref.vt_direction = direction(v.at("vt_direction"), where);
    ref.tolerance = req(v, "tolerance", where + " validation");
    m.reference = ref;
  }
  validate(m);
  return m;
}

}  // namespace

MaterialDatabase MaterialDatabase::parse(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& ex) {
    throw InputError(std::string("material database: ") + ex.what());
  }
  if (doc.value("schema", std::string{}) != "qadsim-materials/1")
    throw InputError("material database: unsupported or missing schema tag");
  if (!doc.contains("materials") || !doc["materials"].is_array())
    throw InputError("material database: missing 'materials' array");
  MaterialDatabase db;
  db.constant_set_ = doc.value("constant_set", std::string{"unversioned"});
  std::size_t index = 0;
  for (const auto& j : doc["materials"]) {
    MaterialRecord m = parse_record(j, index++);
    if (db.contains(m.name)) throw InputError("material database: duplicate record '" + m.name + "'");
    db.records_.push_back(std::move(m));
  }
  return db;
}

const MaterialDatabase& MaterialDatabase::builtin() {
  static const MaterialDatabase db = parse(detail::kEmbeddedDatabase);
  return db;
}

bool MaterialDatabase::contains(std::string_view name) const {
  return std::any_of(records_.begin(), records_.end(), [&](const MaterialRecord& m) { return m.name == name; });
}

const MaterialRecord& MaterialDatabase::lookup(std::string_view name) const {
  for (const auto& m : records_)
    if (m.name == name) return m;
  throw UnknownMaterialError(std::string(name));
}

const MaterialRecord& lookup_material(std::string_view name) { return MaterialDatabase::builtin().lookup(name); }

std::vector<ValidationRow> validate_reference_velocities(const MaterialDatabase& db) {
  std::vector<ValidationRow> rows;
  for (const auto& m : db.records()) {
    if (!m.reference) continue;
    const auto& ref = *m.reference;
    ValidationRow r;
    r.material = m.name;
    const auto vl = christoffel_velocities(m, ref.vl_direction);
    const auto vt = christoffel_velocities(m, ref.vt_direction);
    r.vl_computed = vl[2];
    r.vt_computed = vt[0];
    r.vl_reference = ref.vl;
    r.vt_reference = ref.vt;
    r.vl_error = std::abs(r.vl_computed - ref.vl) / ref.vl;
    r.vt_error = std::abs(r.vt_computed - ref.vt) / ref.vt;
    r.tolerance = ref.tolerance;
    r.pass = r.vl_error <= ref.tolerance && r.vt_error <= ref.tolerance;
    rows.push_back(r);
  }
  return rows;
}

}  // namespace qad::materials
