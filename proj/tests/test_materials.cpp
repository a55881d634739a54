#include <doctest.h>

#include "qad/errors.hpp"
#include "qad/materials.hpp"

#include <cmath>
#include <random>

using namespace qad::materials;

namespace {

// Independent oracle: rotate full-index tensors component by component.
int voigt(int i, int j) {
  if (i == j) return i;
  if ((i == 1 && j == 2) || (i == 2 && j == 1)) return 3;
  if ((i == 0 && j == 2) || (i == 2 && j == 0)) return 4;
  return 5;
}

Matrix6d rotate_stiffness_4index(const Matrix6d& c, const Eigen::Matrix3d& a) {
  double full[3][3][3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) full[i][j][k][l] = c(voigt(i, j), voigt(k, l));
  Matrix6d out = Matrix6d::Zero();
  const int pairs[6][2] = {{0, 0}, {1, 1}, {2, 2}, {1, 2}, {0, 2}, {0, 1}};
  for (int I = 0; I < 6; ++I)
    for (int J = 0; J < 6; ++J) {
      const int i = pairs[I][0], j = pairs[I][1], k = pairs[J][0], l = pairs[J][1];
      double s = 0.0;
      for (int p = 0; p < 3; ++p)
        for (int q = 0; q < 3; ++q)
          for (int r = 0; r < 3; ++r)
            for (int t = 0; t < 3; ++t) s += a(i, p) * a(j, q) * a(k, r) * a(l, t) * full[p][q][r][t];
      out(I, J) = s;
    }
  return out;
}

Matrix36d rotate_piezo_3index(const Matrix36d& e, const Eigen::Matrix3d& a) {
  Matrix36d out = Matrix36d::Zero();
  const int pairs[6][2] = {{0, 0}, {1, 1}, {2, 2}, {1, 2}, {0, 2}, {0, 1}};
  for (int i = 0; i < 3; ++i)
    for (int J = 0; J < 6; ++J) {
      const int j = pairs[J][0], k = pairs[J][1];
      double s = 0.0;
      for (int p = 0; p < 3; ++p)
        for (int q = 0; q < 3; ++q)
          for (int r = 0; r < 3; ++r) s += a(i, p) * a(j, q) * a(k, r) * e(p, voigt(q, r));
      out(i, J) = s;
    }
  return out;
}

Rotation random_rotation(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-M_PI, M_PI);
  return euler_zxz(u(rng), u(rng), u(rng));
}

double rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double scale = std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
  return scale > 0 ? (a - b).cwiseAbs().maxCoeff() / scale : 0.0;
}

}  // namespace

TEST_CASE("lookup returns the database records") {
  CHECK(lookup_material("LiNbO3").piezoelectric);
  CHECK_FALSE(lookup_material("Sapphire").piezoelectric);
  CHECK(lookup_material("Sapphire").piezo.e.isZero(0.0));
  CHECK_THROWS_AS(lookup_material("unobtainium"), qad::UnknownMaterialError);
  for (const auto& m : MaterialDatabase::builtin().records()) {
    CHECK_NOTHROW(validate(m));
    CHECK_FALSE(m.source.empty());
  }
}

TEST_CASE("database parser rejects malformed documents") {
  CHECK_THROWS_AS(MaterialDatabase::parse("{"), qad::InputError);
  CHECK_THROWS_AS(MaterialDatabase::parse(R"({"schema":"other","materials":[]})"), qad::InputError);
  const char* missing_density = R"({"schema":"qadsim-materials/1","constant_set":"t","materials":[
    {"name":"X","symmetry":"isotropic","source":"s","stiffness":{"lambda":1,"mu":1},"permittivity":{"eps11":1}}]})";
  CHECK_THROWS_AS(MaterialDatabase::parse(missing_density), qad::InputError);
}

TEST_CASE("identity rotation leaves tensors unchanged") {
  const auto& ln = lookup_material("LiNbO3");
  const auto r = rotate_material(ln, Rotation::identity());
  CHECK(rel_diff(r.stiffness.c, ln.stiffness.c) < 1e-15);
  CHECK(rel_diff(r.piezo.e, ln.piezo.e) < 1e-15);
  CHECK(rel_diff(r.permittivity.eps, ln.permittivity.eps) < 1e-15);
  CHECK(r.density == ln.density);
}

TEST_CASE("Bond rotation agrees with full-index tensor rotation") {
  std::mt19937 rng(7);
  const auto& ln = lookup_material("LiNbO3");
  for (int trial = 0; trial < 10; ++trial) {
    const Rotation rot = random_rotation(rng);
    const auto r = rotate_material(ln, rot);
    const Eigen::Matrix3d& a = rot.matrix();
    CHECK(rel_diff(r.stiffness.c, rotate_stiffness_4index(ln.stiffness.c, a)) < 1e-12);
    CHECK(rel_diff(r.piezo.e, rotate_piezo_3index(ln.piezo.e, a)) < 1e-12);
    CHECK(rel_diff(r.permittivity.eps, a * ln.permittivity.eps * a.transpose()) < 1e-12);
  }
}

TEST_CASE("rotation matrices are validated") {
  Eigen::Matrix3d bad = Eigen::Matrix3d::Identity();
  bad(0, 0) = -1.0;  // reflection
  CHECK_THROWS_AS(Rotation{bad}, qad::InputError);
  bad = Eigen::Matrix3d::Identity() * 1.001;
  CHECK_THROWS_AS(Rotation{bad}, qad::InputError);
}

TEST_CASE("default orientations map the documented crystal axes") {
  // X-cut LN: surface normal is crystal X, propagation along crystal Y.
  const Eigen::Matrix3d a = CrystalOrientation::x_cut_y_propagating().rotation().matrix();
  CHECK((a.row(1).transpose() - Eigen::Vector3d::UnitX()).norm() < 1e-12);
  CHECK((a.row(2).transpose() - Eigen::Vector3d::UnitY()).norm() < 1e-12);
  // c-plane sapphire: surface normal is crystal Z.
  const Eigen::Matrix3d s = CrystalOrientation::c_plane().rotation().matrix();
  CHECK((s.row(1).transpose() - Eigen::Vector3d::UnitZ()).norm() < 1e-12);
  // Azimuth rotates the propagation direction about the surface normal.
  const Eigen::Matrix3d q = CrystalOrientation::x_cut_y_propagating(M_PI / 2).rotation().matrix();
  CHECK(std::abs(q.row(1).dot(Eigen::Vector3d::UnitX())) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(q.row(2).dot(Eigen::Vector3d::UnitZ())) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("isotropic Christoffel velocities match the closed form") {
  const double rho = 2700, lambda = 60.5e9, mu = 25.9e9;
  const auto m = isotropic("iso", rho, lambda, mu);
  std::mt19937 rng(3);
  std::normal_distribution<double> g;
  for (int i = 0; i < 20; ++i) {
    Eigen::Vector3d n(g(rng), g(rng), g(rng));
    n.normalize();
    const auto v = christoffel_velocities(m, n);
    CHECK(v[0] == doctest::Approx(std::sqrt(mu / rho)).epsilon(1e-12));
    CHECK(v[1] == doctest::Approx(std::sqrt(mu / rho)).epsilon(1e-12));
    CHECK(v[2] == doctest::Approx(std::sqrt((lambda + 2 * mu) / rho)).epsilon(1e-12));
  }
}

TEST_CASE("Christoffel rejects non-unit directions") {
  const auto& ln = lookup_material("LiNbO3");
  CHECK_THROWS_AS(christoffel_velocities(ln, Eigen::Vector3d(1.0, 1e-3, 0.0)), qad::InputError);
}

TEST_CASE("LiNbO3 along crystal X matches the tabulated velocities") {
  const auto v = christoffel_velocities(lookup_material("LiNbO3"), Eigen::Vector3d::UnitX());
  CHECK(std::abs(v[2] / 6572.0 - 1.0) < 0.05);
  CHECK(std::abs(v[0] / 3573.0 - 1.0) < 0.05);
}

TEST_CASE("stiffening is inert for non-piezoelectric sapphire") {
  const auto& s = lookup_material("Sapphire");
  const Eigen::Vector3d n = Eigen::Vector3d(1, 2, 3).normalized();
  const auto a = christoffel_velocities(s, n, false);
  const auto b = christoffel_velocities(s, n, true);
  for (int i = 0; i < 3; ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("confinement screen") {
  const auto& ln = lookup_material("LiNbO3");
  const auto& sap = lookup_material("Sapphire");
  const auto r = confinement_screen(ln, sap);
  CHECK(r.confining);
  CHECK(r.v_waveguide < r.v_substrate);
  CHECK_FALSE(confinement_screen(ln, ln).confining);
  CHECK_FALSE(confinement_screen(lookup_material("AlN"), lookup_material("Si")).confining);
}

TEST_CASE("property: rotated tensors stay symmetric positive definite") {
  std::mt19937 rng(2026);
  for (const char* name : {"LiNbO3", "Sapphire", "Quartz", "ZnO"}) {
    const auto& m = lookup_material(name);
    for (int i = 0; i < 100; ++i) {
      const auto r = rotate_material(m, random_rotation(rng));
      CHECK(rel_diff(r.stiffness.c, r.stiffness.c.transpose()) < 1e-14);
      CHECK(Eigen::SelfAdjointEigenSolver<Matrix6d>(r.stiffness.c).eigenvalues().minCoeff() > 0);
      CHECK(Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(r.permittivity.eps).eigenvalues().minCoeff() > 0);
    }
  }
}

TEST_CASE("property: rotation composition") {
  std::mt19937 rng(11);
  const auto& ln = lookup_material("LiNbO3");
  for (int i = 0; i < 100; ++i) {
    const Rotation o1 = random_rotation(rng), o2 = random_rotation(rng);
    const auto twice = rotate_material(rotate_material(ln, o1), o2);
    const auto once = rotate_material(ln, o2 * o1);
    CHECK(rel_diff(twice.stiffness.c, once.stiffness.c) < 1e-9);
    CHECK(rel_diff(twice.piezo.e, once.piezo.e) < 1e-9);
    CHECK(rel_diff(twice.permittivity.eps, once.permittivity.eps) < 1e-9);
  }
}

TEST_CASE("property: full turn returns the original tensors") {
  const auto& ln = lookup_material("LiNbO3");
  std::mt19937 rng(5);
  std::normal_distribution<double> g;
  for (int i = 0; i < 20; ++i) {
    Eigen::Vector3d axis(g(rng), g(rng), g(rng));
    axis.normalize();
    const Rotation full(Eigen::AngleAxisd(2 * M_PI, axis).toRotationMatrix());
    const auto r = rotate_material(ln, full);
    CHECK(rel_diff(r.stiffness.c, ln.stiffness.c) < 1e-9);
    CHECK(rel_diff(r.piezo.e, ln.piezo.e) < 1e-9);
  }
}

TEST_CASE("property: Christoffel spectrum is non-negative and stiffening only raises velocities") {
  std::mt19937 rng(99);
  std::normal_distribution<double> g;
  for (const auto& m : MaterialDatabase::builtin().records()) {
    for (int i = 0; i < 100; ++i) {
      Eigen::Vector3d n(g(rng), g(rng), g(rng));
      n.normalize();
      const Eigen::Matrix3d gam = christoffel_matrix(m, n, false);
      CHECK(Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(gam).eigenvalues().minCoeff() >= 0);
      if (!m.piezoelectric) continue;
      const auto a = christoffel_velocities(m, n, false);
      const auto b = christoffel_velocities(m, n, true);
      for (int k = 0; k < 3; ++k) CHECK(b[k] >= a[k] * (1 - 1e-12));
    }
  }
}
