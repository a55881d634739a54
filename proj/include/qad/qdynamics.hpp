#pragma once

#include "qad/coupling.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string_view>
#include <vector>

namespace qad::qdynamics {

/// Transmon register (a) tensor phonon register (b); basis index q * n_ph + p.
struct HilbertSpace {
  int n_q = 3;
  int n_ph = 3;
  int max_dimension = 10000;

  int dimension() const { return n_q * n_ph; }
  void validate() const;
};

struct HamiltonianModel {
  coupling::TransmonParams transmon;
  double omega_ph = 0.0;  // rad/s
  double g = 0.0;         // rad/s
  double kappa = 0.0;     // phonon decay, 1/s
  double gamma = 0.0;     // transmon decay, 1/s
  bool rwa = false;       // keep only the excitation-conserving part of the coupling

  /// Transmon 0-1 angular frequency, (sqrt(8 E_c E_J) - E_c) / hbar.
  double omega_q() const;
  void validate() const;
};

/// Truncated annihilation operator.
Eigen::MatrixXcd annihilation(int n);

/// H = (sqrt(8EcEJ) - Ec) a'a - Ec/2 a'a'aa + hbar Omega b'b + i hbar g (b + b')(a - a'), in J.
Eigen::MatrixXcd build_hamiltonian(const HamiltonianModel& m, const HilbertSpace& hs);

/// Gap between the two single-excitation polaritons, rad/s. Requires
/// |omega_q - Omega| <= 0.1 g.
double vacuum_rabi_splitting(const HamiltonianModel& m, const HilbertSpace& hs);

enum class InitialState { qubit_excited, phonon_single, vacuum, user };
InitialState parse_initial_state(std::string_view s);

struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> transmon;  // level populations per time
  std::vector<Eigen::VectorXd> phonon;
  std::vector<double> trace;
  std::vector<double> excitations;  // <a'a + b'b>
};

/// Unitary when kappa = gamma = 0, otherwise Lindblad with collapse operators
/// sqrt(kappa) b and sqrt(gamma) a. `user` must be normalised within 1e-9.
Trajectory evolve(const HamiltonianModel& m, const HilbertSpace& hs, InitialState init,
                  const std::vector<double>& times, const std::optional<Eigen::VectorXcd>& user = std::nullopt);

struct StrongCouplingVerdict {
  bool strong = false;
  double cooperativity = 0.0;  // +inf when a rate is zero
};

StrongCouplingVerdict strong_coupling_check(double g, double kappa, double gamma);

/// Columns t_s, P_q0.., P_ph0.., trace, excitations.
std::string trajectory_csv(const Trajectory& t);

}  // namespace qad::qdynamics
