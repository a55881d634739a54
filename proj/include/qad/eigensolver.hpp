#pragma once

#include "qad/fem.hpp"

#include <string>
#include <vector>

namespace qad::fem {

enum class EigenMethod { automatic, shift_invert, dense };

struct EigenOptions {
  int count = 4;
  double shift = 0.0;  // target omega^2 (rad^2/s^2)
  EigenMethod method = EigenMethod::automatic;
  double tolerance = 1e-10;  // relative Ritz residual
  int max_steps = 400;       // Krylov dimension cap
  int dense_limit = 3000;    // dense fallback only below this many unknowns
};

struct EigenDiagnostics {
  std::string method;
  int iterations = 0;
  bool fallback = false;
  std::vector<double> residuals;
  double factor_seconds = 0.0;
  double total_seconds = 0.0;
  int unknowns = 0;

  std::string to_json() const;
};

struct GuidedModeSolution {
  double omega = 0.0;  // rad/s
  FieldSolution field;
  Eigen::VectorXcd u;  // M-orthonormal displacement unknowns
};

/// Eigenpairs of (K, M) nearest the shift, returned by ascending omega (ties:
/// larger lateral-displacement fraction first). Fields are M-orthonormal and
/// phase-fixed. Throws SolverError with residual norms on non-convergence.
std::vector<GuidedModeSolution> solve_guided_modes(const GuidedProblem& p, const GuidedMatrices& m,
                                                   const EigenOptions& opt, EigenDiagnostics* diag = nullptr);

}  // namespace qad::fem
