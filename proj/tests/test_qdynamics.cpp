#include <doctest.h>

#include "qad/constants.hpp"
#include "qad/errors.hpp"
#include "qad/qdynamics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

using namespace qad;
using namespace qad::qdynamics;
using constants::hbar;
using constants::planck;
using constants::two_pi;

namespace {

const double kW = two_pi * 6e9;
const double kG = two_pi * 1.3e6;

HamiltonianModel resonant(double g) {
  HamiltonianModel m;
  m.transmon = coupling::transmon_from_target(6e9);
  m.omega_ph = kW;
  m.g = g;
  return m;
}

// Nearly harmonic transmon: E_c tiny at fixed 0-1 frequency.
HamiltonianModel harmonic(double g) {
  HamiltonianModel m;
  m.transmon.ec = planck * 6e9 * 1e-9;
  const double s = planck * 6e9 + m.transmon.ec;
  m.transmon.ej = s * s / (8 * m.transmon.ec);
  m.omega_ph = kW;
  m.g = g;
  return m;
}

// Normal-mode frequencies of w a'a + W b'b + i g (b + b')(a - a') from the
// 4x4 Heisenberg equations for (a, b, a', b').
std::vector<double> oscillator_frequencies(double w, double W, double g) {
  Eigen::Matrix4cd d = Eigen::Matrix4cd::Zero();
  const std::complex<double> i(0, 1);
  // da/dt = -i w a - g (b + b'), db/dt = -i W b + g (a - a'), plus conjugates.
  d(0, 0) = -i * w;
  d(0, 1) = -g;
  d(0, 3) = -g;
  d(1, 1) = -i * W;
  d(1, 0) = g;
  d(1, 2) = -g;
  d(2, 2) = i * w;
  d(2, 1) = -g;
  d(2, 3) = -g;
  d(3, 3) = i * W;
  d(3, 0) = -g;
  d(3, 2) = g;
  Eigen::ComplexEigenSolver<Eigen::Matrix4cd> es(d);
  std::vector<double> f;
  for (int k = 0; k < 4; ++k)
    if (es.eigenvalues()(k).imag() > 0) f.push_back(es.eigenvalues()(k).imag());
  std::sort(f.begin(), f.end());
  return f;
}

}  // namespace

TEST_CASE("Hamiltonian is Hermitian with real spectrum") {
  HilbertSpace hs{4, 5};
  const auto h = build_hamiltonian(resonant(kG), hs);
  CHECK(h.rows() == 20);
  CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() <= 1e-12 * h.cwiseAbs().maxCoeff());
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(h);
  for (int k = 0; k < h.rows(); ++k) CHECK(std::abs(es.eigenvalues()(k).imag()) < 1e-9 * h.cwiseAbs().maxCoeff());
}

TEST_CASE("uncoupled spectrum is the tensor sum") {
  HilbertSpace hs{4, 4};
  auto m = resonant(0.0);
  m.omega_ph = two_pi * 5.3e9;
  const auto h = build_hamiltonian(m, hs);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  std::vector<double> ref;
  const double wq = std::sqrt(8 * m.transmon.ec * m.transmon.ej) - m.transmon.ec;
  for (int n = 0; n < 4; ++n)
    for (int k = 0; k < 4; ++k) ref.push_back(n * wq - 0.5 * m.transmon.ec * n * (n - 1) + hbar * m.omega_ph * k);
  std::sort(ref.begin(), ref.end());
  for (int i = 0; i < 16; ++i) CHECK(es.eigenvalues()(i) == doctest::Approx(ref[i]).epsilon(1e-12).scale(ref[15]));
}

TEST_CASE("harmonic limit matches the two-oscillator normal modes") {
  for (double g : {kG, two_pi * 30e6}) {
    const auto m = harmonic(g);
    const auto modes = oscillator_frequencies(m.omega_q(), kW, g);
    REQUIRE(modes.size() == 2);
    const double split = vacuum_rabi_splitting(m, HilbertSpace{4, 4});
    CHECK(split == doctest::Approx(modes[1] - modes[0]).epsilon(1e-6));
    CHECK(split == doctest::Approx(2 * g).epsilon(1e-3));
  }
}

TEST_CASE("truncation convergence of the low spectrum") {
  const auto m = resonant(1e-3 * kW);
  auto low = [&](int nph) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(build_hamiltonian(m, HilbertSpace{4, nph}));
    return es.eigenvalues().head(4).eval();
  };
  const auto a = low(5), b = low(10);
  for (int i = 0; i < 4; ++i) {
    const double scale = std::max(std::abs(b(i)), hbar * kW);
    CHECK(std::abs(a(i) - b(i)) < 1e-6 * scale);
  }
}

TEST_CASE("vacuum Rabi splitting at resonance") {
  HilbertSpace hs{4, 4};
  const double split = vacuum_rabi_splitting(resonant(kG), hs);
  // Single-excitation block {|1,0>, |0,1>} of the excitation-conserving part.
  Eigen::Matrix2cd block;
  block << kW, std::complex<double>(0, -kG), std::complex<double>(0, kG), kW;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(block);
  const double oracle = es.eigenvalues()(1) - es.eigenvalues()(0);
  CHECK(split == doctest::Approx(oracle).epsilon(0.01));
  CHECK(split / two_pi == doctest::Approx(2.6e6).epsilon(0.01));

  CHECK(vacuum_rabi_splitting(resonant(0.0), hs) == doctest::Approx(0.0).epsilon(1e-9).scale(kG));

  auto detuned = resonant(kG);
  detuned.omega_ph += 0.2 * kG;
  CHECK_THROWS_AS(vacuum_rabi_splitting(detuned, hs), InputError);
}

TEST_CASE("splitting is linear in g with slope 2") {
  HilbertSpace hs{4, 4};
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (double r = 1e-5; r <= 1e-3; r *= 2) {
    const double g = r * kW;
    const double s = vacuum_rabi_splitting(resonant(g), hs);
    sx += g;
    sy += s;
    sxx += g * g;
    sxy += g * s;
    ++n;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  CHECK(slope == doctest::Approx(2.0).epsilon(0.01));
}

TEST_CASE("excitation exchange takes pi / 2g") {
  HilbertSpace hs{3, 3};
  std::vector<double> t;
  for (int i = 0; i <= 4000; ++i) t.push_back(i * 0.1e-9);
  const auto tr = evolve(resonant(kG), hs, InitialState::qubit_excited, t);
  std::size_t best = 0;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (tr.phonon[i](1) > tr.phonon[best](1)) best = i;
  CHECK(t[best] == doctest::Approx(constants::pi / (2 * kG)).epsilon(0.02));
  CHECK(t[best] == doctest::Approx(192e-9).epsilon(0.02));
  CHECK(tr.phonon[best](1) > 0.99);
  for (double x : tr.trace) CHECK(std::abs(x - 1.0) < 1e-9);
}

TEST_CASE("uncoupled evolution leaves populations unchanged") {
  HilbertSpace hs{3, 4};
  const std::vector<double> t{0, 1e-9, 1e-7, 3e-6};
  for (auto init : {InitialState::qubit_excited, InitialState::phonon_single, InitialState::vacuum}) {
    const auto tr = evolve(resonant(0.0), hs, init, t);
    for (std::size_t i = 1; i < t.size(); ++i) {
      CHECK((tr.transmon[i] - tr.transmon[0]).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((tr.phonon[i] - tr.phonon[0]).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("vacuum is stationary up to the counter-rotating bound") {
  HilbertSpace hs{3, 3};
  const double g = 1e-2 * kW;
  std::vector<double> t;
  for (int i = 0; i <= 200; ++i) t.push_back(i * 2e-11);
  const auto tr = evolve(resonant(g), hs, InitialState::vacuum, t);
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(std::abs(tr.transmon[i](0) * tr.phonon[i](0) - 1.0) < 2 * 1e-4);
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(1.0 - tr.transmon[i](0) < 1e-4);
}

TEST_CASE("excitation number conservation") {
  // Leading order: |1,0> leaks into |2,1> across a gap 2 Omega - alpha
  // (alpha = E_c / hbar), peak population 2 (g / (2 Omega - alpha))^2 x 4, two
  // extra quanta each. The harmonic limit gives exactly 4 (g / Omega)^2.
  HilbertSpace hs{4, 4};
  std::vector<double> t;
  for (int i = 0; i <= 2000; ++i) t.push_back(i * 2e-12);
  const double r = 1e-2;
  for (bool harm : {false, true}) {
    auto m = harm ? harmonic(r * kW) : resonant(r * kW);
    const double alpha = m.transmon.ec / hbar;
    const double bound = 4 * r * r * std::pow(2 * kW / (2 * kW - alpha), 2);
    const auto tr = evolve(m, hs, InitialState::qubit_excited, t);
    double dev = 0;
    for (double n : tr.excitations) dev = std::max(dev, std::abs(n - 1.0));
    CHECK(dev <= bound * 1.005);
    CHECK(dev >= bound * 0.98);  // the leak is real, not numerical noise
  }
  auto m = resonant(r * kW);
  m.rwa = true;
  const auto rwa = evolve(m, hs, InitialState::qubit_excited, t);
  for (double n : rwa.excitations) CHECK(std::abs(n - 1.0) < 1e-10);
}

TEST_CASE("Lindblad evolution: trace, positivity, decay law") {
  HilbertSpace hs{3, 3};
  auto m = resonant(kG);
  m.kappa = two_pi * 0.1e6;
  m.gamma = two_pi * 0.2e6;
  std::vector<double> t;
  for (int i = 0; i <= 100; ++i) t.push_back(i * 5e-9);
  const auto tr = evolve(m, hs, InitialState::qubit_excited, t);
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(std::abs(tr.trace[i] - 1.0) < 1e-8);
    CHECK(tr.transmon[i].minCoeff() >= -1e-10);
    CHECK(tr.phonon[i].minCoeff() >= -1e-10);
  }
  // Uncoupled phonon decays as exp(-kappa t).
  auto free = resonant(0.0);
  free.kappa = two_pi * 0.5e6;
  const auto d = evolve(free, hs, InitialState::phonon_single, t);
  for (std::size_t i = 0; i < t.size(); ++i)
    CHECK(d.phonon[i](1) == doctest::Approx(std::exp(-free.kappa * t[i])).epsilon(1e-8));
  // Irregular grid gives the same populations.
  const auto irregular = evolve(free, hs, InitialState::phonon_single, {0.0, 7e-9, 100e-9, 101e-9});
  CHECK(irregular.phonon[2](1) == doctest::Approx(std::exp(-free.kappa * 100e-9)).epsilon(1e-8));
}

TEST_CASE("input validation") {
  HilbertSpace small{2, 3};
  CHECK_THROWS_AS(build_hamiltonian(resonant(kG), small), InputError);
  HilbertSpace huge{200, 200};
  CHECK_THROWS_AS(build_hamiltonian(resonant(kG), huge), InputError);
  HilbertSpace hs{3, 3};
  CHECK_THROWS_AS(evolve(resonant(kG), hs, InitialState::vacuum, {1e-9, 0.0}), InputError);
  Eigen::VectorXcd v = Eigen::VectorXcd::Ones(9);
  CHECK_THROWS_AS(evolve(resonant(kG), hs, InitialState::user, {0.0}, v), InputError);
  v.normalize();
  CHECK_NOTHROW(evolve(resonant(kG), hs, InitialState::user, {0.0, 1e-9}, v));
  auto lossy = resonant(kG);
  lossy.kappa = -1;
  CHECK_THROWS_AS(build_hamiltonian(lossy, hs), InputError);
  CHECK(parse_initial_state("qubit-excited") == InitialState::qubit_excited);
  CHECK_THROWS_AS(parse_initial_state("cat"), InputError);
}

TEST_CASE("strong coupling verdict") {
  const auto v = strong_coupling_check(two_pi * 13e6, two_pi * 0.1e6, two_pi * 0.1e6);
  CHECK(v.strong);
  CHECK(v.cooperativity == doctest::Approx(4 * 130.0 * 130.0));
  CHECK_FALSE(strong_coupling_check(0.0, 1.0, 1.0).strong);
  CHECK_FALSE(strong_coupling_check(1.0, 1.0, 1.0).strong);
  CHECK(std::isinf(strong_coupling_check(1.0, 0.0, 1.0).cooperativity));
  CHECK_THROWS_AS(strong_coupling_check(1.0, -1.0, 1.0), InputError);
}
