#include "qad/qdynamics.hpp"

#include "qad/constants.hpp"
#include "qad/errors.hpp"

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace qad::qdynamics {

using constants::hbar;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

namespace {
// Superoperator matrix exponentials beyond this dimension get too expensive.
constexpr int kLindbladMaxDimension = 40;
}  // namespace

void HilbertSpace::validate() const {
  if (n_q < 3 || n_ph < 3) throw InputError("register truncations must be >= 3");
  if (static_cast<long>(n_q) * n_ph > max_dimension)
    throw InputError("Hilbert space dimension " + std::to_string(static_cast<long>(n_q) * n_ph) +
                     " exceeds the cap " + std::to_string(max_dimension));
}

double HamiltonianModel::omega_q() const {
  return (std::sqrt(8.0 * transmon.ec * transmon.ej) - transmon.ec) / hbar;
}

void HamiltonianModel::validate() const {
  if (!(transmon.ec > 0) || !(transmon.ej > 0)) throw InputError("transmon energies must be positive");
  if (!(omega_ph > 0)) throw InputError("phonon frequency must be positive");
  if (!std::isfinite(g)) throw InputError("coupling must be finite");
  if (kappa < 0 || gamma < 0) throw InputError("decay rates must be non-negative");
}

Mat annihilation(int n) {
  Mat a = Mat::Zero(n, n);
  for (int k = 1; k < n; ++k) a(k - 1, k) = std::sqrt(static_cast<double>(k));
  return a;
}

namespace {

struct Operators {
  Mat a, b;  // transmon, phonon on the full space
};

Operators operators(const HilbertSpace& hs) {
  const Mat iq = Mat::Identity(hs.n_q, hs.n_q), ip = Mat::Identity(hs.n_ph, hs.n_ph);
  return {Eigen::kroneckerProduct(annihilation(hs.n_q), ip).eval(),
          Eigen::kroneckerProduct(iq, annihilation(hs.n_ph)).eval()};
}

// H / hbar in rad/s.
Mat angular_hamiltonian(const HamiltonianModel& m, const HilbertSpace& hs) {
  const auto op = operators(hs);
  const Mat ad = op.a.adjoint(), bd = op.b.adjoint();
  const double wq = m.omega_q();
  const double anh = m.transmon.ec / hbar;
  Mat h = wq * (ad * op.a) - 0.5 * anh * (ad * ad * op.a * op.a) + m.omega_ph * (bd * op.b);
  const std::complex<double> ig(0.0, m.g);
  if (m.rwa)
    h += ig * (bd * op.a - op.b * ad);
  else
    h += ig * (op.b + bd) * (op.a - ad);
  return h;
}

double max_abs(const Mat& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

Mat build_hamiltonian(const HamiltonianModel& m, const HilbertSpace& hs) {
  m.validate();
  hs.validate();
  Mat h = hbar * angular_hamiltonian(m, hs);
  const double scale = max_abs(h);
  if (scale > 0 && max_abs(h - h.adjoint()) > 1e-12 * scale) throw SolverError("Hamiltonian is not Hermitian");
  return h;
}

double vacuum_rabi_splitting(const HamiltonianModel& m, const HilbertSpace& hs) {
  m.validate();
  hs.validate();
  const double detuning = m.omega_q() - m.omega_ph;
  if (std::abs(detuning) > 0.1 * std::abs(m.g) * (1 + 1e-12)) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "qubit detuned by %.4g rad/s, more than 0.1 g from the phonon", detuning);
    throw InputError(buf);
  }
  const Mat h = angular_hamiltonian(m, hs);
  Eigen::SelfAdjointEigenSolver<Mat> es(h);
  const int q1 = hs.n_ph, p1 = 1;  // |1,0> and |0,1>
  int first = -1, second = -1;
  double w1 = -1, w2 = -1;
  for (int i = 0; i < h.rows(); ++i) {
    const double w = std::norm(es.eigenvectors()(q1, i)) + std::norm(es.eigenvectors()(p1, i));
    if (w > w1) {
      second = first;
      w2 = w1;
      first = i;
      w1 = w;
    } else if (w > w2) {
      second = i;
      w2 = w;
    }
  }
  return std::abs(es.eigenvalues()(first) - es.eigenvalues()(second));
}

InitialState parse_initial_state(std::string_view s) {
  if (s == "qubit-excited" || s == "qubit_excited") return InitialState::qubit_excited;
  if (s == "phonon-single" || s == "phonon_single") return InitialState::phonon_single;
  if (s == "vacuum") return InitialState::vacuum;
  if (s == "user") return InitialState::user;
  throw InputError("unknown initial state '" + std::string(s) + "'");
}

namespace {

Vec initial_vector(const HilbertSpace& hs, InitialState init, const std::optional<Vec>& user) {
  Vec psi = Vec::Zero(hs.dimension());
  switch (init) {
    case InitialState::qubit_excited:
      psi(hs.n_ph) = 1.0;
      break;
    case InitialState::phonon_single:
      psi(1) = 1.0;
      break;
    case InitialState::vacuum:
      psi(0) = 1.0;
      break;
    case InitialState::user:
      if (!user) throw InputError("user initial state requires a vector");
      if (user->size() != hs.dimension()) throw InputError("user state has the wrong dimension");
      if (std::abs(user->norm() - 1.0) > 1e-9) throw InputError("user state is not normalised");
      psi = *user;
      break;
  }
  return psi;
}

void record(Trajectory& tr, const HilbertSpace& hs, const Mat& rho, const Mat& number, double t) {
  Eigen::VectorXd pq = Eigen::VectorXd::Zero(hs.n_q), pp = Eigen::VectorXd::Zero(hs.n_ph);
  for (int q = 0; q < hs.n_q; ++q)
    for (int p = 0; p < hs.n_ph; ++p) {
      const double v = rho(q * hs.n_ph + p, q * hs.n_ph + p).real();
      pq(q) += v;
      pp(p) += v;
    }
  tr.times.push_back(t);
  tr.transmon.push_back(pq);
  tr.phonon.push_back(pp);
  tr.trace.push_back(rho.trace().real());
  tr.excitations.push_back((number * rho).trace().real());
}

}  // namespace

Trajectory evolve(const HamiltonianModel& m, const HilbertSpace& hs, InitialState init,
                  const std::vector<double>& times, const std::optional<Vec>& user) {
  m.validate();
  hs.validate();
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] >= 0) || !std::isfinite(times[i])) throw InputError("times must be finite and non-negative");
    if (i > 0 && !(times[i] > times[i - 1])) throw InputError("time grid must be ascending");
  }
  const Vec psi0 = initial_vector(hs, init, user);
  const Mat h = angular_hamiltonian(m, hs);
  const auto op = operators(hs);
  const Mat number = op.a.adjoint() * op.a + op.b.adjoint() * op.b;
  Trajectory tr;

  if (m.kappa == 0 && m.gamma == 0) {
    Eigen::SelfAdjointEigenSolver<Mat> es(h);
    const Mat& v = es.eigenvectors();
    const Vec c0 = v.adjoint() * psi0;
    for (double t : times) {
      Vec c = c0;
      for (int k = 0; k < c.size(); ++k) c(k) *= std::polar(1.0, -es.eigenvalues()(k) * t);
      const Vec psi = v * c;
      record(tr, hs, psi * psi.adjoint(), number, t);
    }
    return tr;
  }

  const int n = hs.dimension();
  if (n > kLindbladMaxDimension)
    throw InputError("Lindblad evolution is limited to dimension " + std::to_string(kLindbladMaxDimension));
  // Column-stacked vec: vec(A X B) = (B^T kron A) vec(X).
  const Mat id = Mat::Identity(n, n);
  const std::complex<double> i(0, 1);
  Mat l = -i * (Eigen::kroneckerProduct(id, h) - Eigen::kroneckerProduct(h.transpose(), id)).eval();
  auto dissipate = [&](const Mat& c) {
    const Mat cdc = c.adjoint() * c;
    l += Eigen::kroneckerProduct(c.conjugate(), c).eval();
    l -= 0.5 * (Eigen::kroneckerProduct(id, cdc) + Eigen::kroneckerProduct(cdc.transpose(), id)).eval();
  };
  if (m.kappa > 0) dissipate(std::sqrt(m.kappa) * op.b);
  if (m.gamma > 0) dissipate(std::sqrt(m.gamma) * op.a);

  Mat rho = psi0 * psi0.adjoint();
  Vec r = Eigen::Map<const Vec>(rho.data(), n * n);
  double t_prev = 0.0, dt_cached = -1.0;
  Mat step;
  for (double t : times) {
    const double dt = t - t_prev;
    if (dt > 0) {
      if (std::abs(dt - dt_cached) > 1e-12 * dt) {
        step = (l * dt).exp();
        dt_cached = dt;
      }
      r = step * r;
    }
    t_prev = t;
    rho = Eigen::Map<const Mat>(r.data(), n, n);
    record(tr, hs, rho, number, t);
  }
  return tr;
}

StrongCouplingVerdict strong_coupling_check(double g, double kappa, double gamma) {
  if (g < 0 || kappa < 0 || gamma < 0) throw InputError("rates must be non-negative");
  StrongCouplingVerdict v;
  v.strong = 2.0 * g > kappa + gamma;
  v.cooperativity = (kappa > 0 && gamma > 0) ? 4.0 * g * g / (kappa * gamma)
                                             : std::numeric_limits<double>::infinity();
  return v;
}

std::string trajectory_csv(const Trajectory& t) {
  std::ostringstream os;
  os << "t_s";
  const auto nq = t.transmon.empty() ? 0 : t.transmon[0].size();
  const auto np = t.phonon.empty() ? 0 : t.phonon[0].size();
  for (Eigen::Index k = 0; k < nq; ++k) os << ",P_q" << k;
  for (Eigen::Index k = 0; k < np; ++k) os << ",P_ph" << k;
  os << ",trace,excitations\n";
  char buf[64];
  for (std::size_t i = 0; i < t.times.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.9g", t.times[i]);
    os << buf;
    for (Eigen::Index k = 0; k < nq; ++k) {
      std::snprintf(buf, sizeof buf, ",%.9f", t.transmon[i](k));
      os << buf;
    }
    for (Eigen::Index k = 0; k < np; ++k) {
      std::snprintf(buf, sizeof buf, ",%.9f", t.phonon[i](k));
      os << buf;
    }
    std::snprintf(buf, sizeof buf, ",%.12f,%.9f\n", t.trace[i], t.excitations[i]);
    os << buf;
  }
  return os.str();
}

}  // namespace qad::qdynamics
