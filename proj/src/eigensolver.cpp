#include "qad/eigensolver.hpp"

#include "qad/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <optional>

namespace qad::fem {

std::string EigenDiagnostics::to_json() const {
  nlohmann::json j;
  j["method"] = method;
  j["iterations"] = iterations;
  j["fallback"] = fallback;
  j["residuals"] = residuals;
  j["factor_seconds"] = factor_seconds;
  j["total_seconds"] = total_seconds;
  j["unknowns"] = unknowns;
  return j.dump();
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct EigenPairs {
  std::vector<double> lambda;
  std::vector<Eigen::VectorXcd> vectors;
  std::vector<double> residuals;
  int iterations = 0;
};

/// Saddle-point factorization giving x = (K_cond - sigma M)^-1 r without forming K_cond.
class ShiftedOperator {
 public:
  ShiftedOperator(const GuidedMatrices& m, double sigma) : nu_(m.kuu.rows()), np_(m.kpp.rows()) {
    // Potential unknowns are rescaled (phi = s psi) so both diagonal blocks have
    // comparable magnitude; otherwise pivoting loses digits.
    double s = 1.0;
    if (np_ > 0) {
      const double ku = m.kuu.coeffs().cwiseAbs().maxCoeff(), kp = m.kpp.coeffs().cwiseAbs().maxCoeff();
      if (ku > 0 && kp > 0) s = std::sqrt(ku / kp);
    }
    std::vector<Eigen::Triplet<cd>> t;
    t.reserve(m.kuu.nonZeros() + m.m.nonZeros() + 2 * m.kup.nonZeros() + m.kpp.nonZeros());
    for (int k = 0; k < m.kuu.outerSize(); ++k)
      for (SparseC::InnerIterator it(m.kuu, k); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
    for (int k = 0; k < m.m.outerSize(); ++k)
      for (SparseR::InnerIterator it(m.m, k); it; ++it) t.emplace_back(it.row(), it.col(), -sigma * it.value());
    for (int k = 0; k < m.kup.outerSize(); ++k)
      for (SparseC::InnerIterator it(m.kup, k); it; ++it) {
        t.emplace_back(it.row(), nu_ + it.col(), s * it.value());
        t.emplace_back(nu_ + it.col(), it.row(), s * std::conj(it.value()));
      }
    for (int k = 0; k < m.kpp.outerSize(); ++k)
      for (SparseC::InnerIterator it(m.kpp, k); it; ++it) t.emplace_back(nu_ + it.row(), nu_ + it.col(), -s * s * it.value());
    SparseC a(nu_ + np_, nu_ + np_);
    a.setFromTriplets(t.begin(), t.end());
    a.makeCompressed();
    lu_.analyzePattern(a);
    lu_.factorize(a);
    if (lu_.info() != Eigen::Success)
      throw SolverError("shift-invert factorization failed (shift coincides with an eigenvalue or singular block)");
  }

  Eigen::VectorXcd solve(const Eigen::VectorXcd& r) const {
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(nu_ + np_);
    rhs.head(nu_) = r;
    Eigen::VectorXcd x = lu_.solve(rhs);
    return x.head(nu_);
  }

 private:
  Eigen::Index nu_, np_;
  Eigen::SparseLU<SparseC, Eigen::COLAMDOrdering<int>> lu_;
};

Eigen::VectorXcd start_vector(Eigen::Index n) {
  Eigen::VectorXcd v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = static_cast<double>(i);
    v(i) = cd(1.0 + 0.3 * std::sin(0.618 * x + 0.1), 0.2 * std::cos(1.3 * x));
  }
  return v;
}

double m_norm(const SparseR& m, const Eigen::VectorXcd& v) {
  return std::sqrt(std::max(0.0, std::real(v.dot(m * v))));
}

/// Lanczos on OP = (K - sigma M)^-1 M in the M inner product with full reorthogonalization.
std::optional<EigenPairs> lanczos(const ShiftedOperator& op, const SparseR& M, double sigma, int k, int max_steps,
                                  double tol, std::vector<double>& last_residuals) {
  const Eigen::Index n = M.rows();
  const int cap = static_cast<int>(std::min<Eigen::Index>(n, max_steps));
  std::vector<Eigen::VectorXcd> Q, MQ;
  std::vector<double> alpha, beta;
  Eigen::VectorXcd q = start_vector(n);
  q /= m_norm(M, q);

  for (int j = 0; j < cap; ++j) {
    Q.push_back(q);
    MQ.push_back(M * q);
    Eigen::VectorXcd w = op.solve(MQ.back());
    const double a = std::real(MQ[j].dot(w));
    w -= a * Q[j];
    if (j > 0) w -= beta[j - 1] * Q[j - 1];
    for (int pass = 0; pass < 2; ++pass)
      for (int i = 0; i <= j; ++i) w -= MQ[i].dot(w) * Q[i];
    const double b = m_norm(M, w);
    alpha.push_back(a);

    const int m = j + 1;
    const bool exhausted = b <= 1e-13 * std::abs(a) || m == cap;
    if (m >= std::min(cap, 2 * k + 4) && (m % 4 == 0 || exhausted)) {
      Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
      for (int i = 0; i < m; ++i) {
        T(i, i) = alpha[i];
        if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[i];
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
      std::vector<int> idx(m);
      std::iota(idx.begin(), idx.end(), 0);
      // Largest |theta| are the eigenvalues nearest the shift.
      std::stable_sort(idx.begin(), idx.end(), [&](int x, int y) {
        return std::abs(es.eigenvalues()(x)) > std::abs(es.eigenvalues()(y));
      });
      const int kk = std::min(k, m);
      last_residuals.assign(kk, 0.0);
      bool ok = true;
      for (int i = 0; i < kk; ++i) {
        const double theta = es.eigenvalues()(idx[i]);
        const double r = std::abs(b * es.eigenvectors()(m - 1, idx[i])) / std::max(std::abs(theta), 1e-300);
        last_residuals[i] = r;
        if (!(r <= tol)) ok = false;
      }
      if (ok || (exhausted && b <= 1e-13 * std::abs(a))) {
        EigenPairs out;
        out.iterations = m;
        for (int i = 0; i < kk; ++i) {
          const double theta = es.eigenvalues()(idx[i]);
          Eigen::VectorXcd x = Eigen::VectorXcd::Zero(n);
          for (int r = 0; r < m; ++r) x += es.eigenvectors()(r, idx[i]) * Q[r];
          x /= m_norm(M, x);
          out.lambda.push_back(sigma + 1.0 / theta);
          out.vectors.push_back(std::move(x));
          out.residuals.push_back(last_residuals[i]);
        }
        return out;
      }
    }
    if (b <= 1e-13 * std::abs(a)) break;
    beta.push_back(b);
    q = w / b;
  }
  return std::nullopt;
}

EigenPairs dense_pairs(const GuidedMatrices& mats, double sigma, int k) {
  const Condensation cond(mats);
  const Eigen::MatrixXcd K = cond.dense();
  const Eigen::MatrixXcd M = Eigen::MatrixXd(mats.m).cast<cd>();
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXcd> ges(K, M);
  if (ges.info() != Eigen::Success) throw SolverError("dense generalized eigensolver failed");
  const Eigen::Index n = K.rows();
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    return std::abs(ges.eigenvalues()(a) - sigma) < std::abs(ges.eigenvalues()(b) - sigma);
  });
  EigenPairs out;
  for (int i = 0; i < std::min<Eigen::Index>(k, n); ++i) {
    const Eigen::VectorXcd x = ges.eigenvectors().col(idx[i]);
    out.lambda.push_back(ges.eigenvalues()(idx[i]));
    const Eigen::VectorXcd r = K * x - out.lambda.back() * (M * x);
    out.residuals.push_back(r.norm() / std::max((K * x).norm(), 1e-300));
    out.vectors.push_back(x);
  }
  out.iterations = 1;
  return out;
}

double lateral_fraction(const SparseR& M, const Eigen::VectorXcd& u) {
  // Unknowns are numbered (x, y, z) per node.
  Eigen::VectorXcd ux = Eigen::VectorXcd::Zero(u.size());
  for (Eigen::Index i = 0; i < u.size(); i += 3) ux(i) = u(i);
  const double tot = std::real(u.dot(M * u));
  return tot > 0 ? std::real(ux.dot(M * ux)) / tot : 0.0;
}

}  // namespace

std::vector<GuidedModeSolution> solve_guided_modes(const GuidedProblem& p, const GuidedMatrices& m,
                                                   const EigenOptions& opt, EigenDiagnostics* diag) {
  if (opt.count < 1) throw InputError("mode count must be >= 1");
  const auto t0 = Clock::now();
  const int n = p.displacement_unknowns();
  if (n == 0) throw InputError("problem has no displacement unknowns");
  EigenDiagnostics d;
  d.unknowns = n;

  EigenPairs pairs;
  const bool tiny = n <= 2 * opt.count + 20;
  if (opt.method == EigenMethod::dense || (opt.method == EigenMethod::automatic && tiny)) {
    d.method = "dense";
    pairs = dense_pairs(m, opt.shift, opt.count);
  } else {
    d.method = "shift-invert-lanczos";
    const auto tf = Clock::now();
    const ShiftedOperator op(m, opt.shift);
    d.factor_seconds = seconds_since(tf);
    std::vector<double> res;
    auto got = lanczos(op, m.m, opt.shift, opt.count, opt.max_steps, opt.tolerance, res);
    if (got) {
      pairs = std::move(*got);
    } else if (n < opt.dense_limit && opt.method == EigenMethod::automatic) {
      d.fallback = true;
      d.method = "dense";
      pairs = dense_pairs(m, opt.shift, opt.count);
    } else {
      d.residuals = res;
      d.total_seconds = seconds_since(t0);
      if (diag) *diag = d;
      throw SolverError("shift-invert Lanczos did not converge in " + std::to_string(opt.max_steps) + " steps", res);
    }
  }
  d.iterations = pairs.iterations;
  d.residuals = pairs.residuals;

  const Condensation cond(m);
  std::vector<GuidedModeSolution> out;
  std::vector<double> lat;
  for (std::size_t i = 0; i < pairs.vectors.size(); ++i) {
    GuidedModeSolution s;
    s.u = pairs.vectors[i];
    // Rayleigh quotient: second-order accurate in the eigenvector error.
    const double lambda = std::real(s.u.dot(cond.apply(s.u))) / std::real(s.u.dot(m.m * s.u));
    s.omega = std::sqrt(std::max(0.0, lambda));
    const Eigen::VectorXcd phi = cond.potential(s.u);
    s.field = expand(p, s.u, phi, m.beta, s.omega);
    const cd f = s.field.fix_phase();
    s.u *= f;
    lat.push_back(lateral_fraction(m.m, s.u));
    out.push_back(std::move(s));
  }
  std::vector<int> idx(out.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    const double wa = out[a].omega, wb = out[b].omega;
    if (std::abs(wa - wb) > 1e-12 * std::max(wa, wb)) return wa < wb;
    return lat[a] > lat[b];
  });
  std::vector<GuidedModeSolution> sorted;
  for (int i : idx) sorted.push_back(std::move(out[i]));
  d.total_seconds = seconds_since(t0);
  if (diag) *diag = d;
  return sorted;
}

}  // namespace qad::fem
