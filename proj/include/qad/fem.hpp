#pragma once

// Guided-wave finite elements on a 2D cross-section. Fields vary as e^{i beta z}
// along the propagation axis z; the mesh spans the (x, y) plane.

#include "qad/materials.hpp"
#include "qad/mesh.hpp"

#include <Eigen/Sparse>

#include <complex>
#include <memory>
#include <optional>
#include <vector>

namespace qad::fem {

using cd = std::complex<double>;
using SparseC = Eigen::SparseMatrix<cd>;
using SparseR = Eigen::SparseMatrix<double>;

/// Device-frame material per mesh region. Vacuum is implicit (eps0, no mass).
struct RegionMaterials {
  std::optional<materials::MaterialRecord> waveguide;
  std::optional<materials::MaterialRecord> substrate;

  const materials::MaterialRecord* find(Region r) const;
  bool piezoelectric() const;
};

/// Unknown numbering for the guided problem. Displacements live on nodes of
/// solid elements; nodes on `fixed` edges are clamped and grounded. Potential
/// unknowns exist only when some region is piezoelectric.
class GuidedProblem {
 public:
  /// `grounded` lists extra nodes held at zero potential (e.g. a shorted surface).
  GuidedProblem(std::shared_ptr<const Mesh2D> mesh, RegionMaterials materials, std::vector<int> grounded = {});

  const Mesh2D& mesh() const noexcept { return *mesh_; }
  const std::shared_ptr<const Mesh2D>& mesh_ptr() const noexcept { return mesh_; }
  const RegionMaterials& materials() const noexcept { return materials_; }

  int displacement_unknowns() const noexcept { return n_u_; }
  int potential_unknowns() const noexcept { return n_phi_; }
  bool has_potential() const noexcept { return has_phi_; }

  /// Unknown index of displacement component `c` at node, or -1 when constrained.
  int u_index(int node, int c) const { return u_index_[3 * rep_[node] + c]; }
  int phi_index(int node) const { return phi_index_[rep_[node]]; }

 private:
  std::shared_ptr<const Mesh2D> mesh_;
  RegionMaterials materials_;
  std::vector<int> rep_;
  std::vector<int> u_index_;
  std::vector<int> phi_index_;
  int n_u_ = 0;
  int n_phi_ = 0;
  bool has_phi_ = false;
};

/// Uncondensed blocks: [Kuu Kup; Kup^H -Kpp] with mass M on displacements.
struct GuidedMatrices {
  double beta = 0.0;
  SparseC kuu;
  SparseC kup;
  SparseC kpp;
  SparseR m;
};

/// Throws InputError for missing region materials or metal elements. Negative
/// beta is accepted (backward waves) although sweeps only use beta >= 0.
GuidedMatrices assemble_guided(const GuidedProblem& p, double beta);

/// Static condensation of the potential: K = Kuu + Kup Kpp^-1 Kup^H.
class Condensation {
 public:
  /// Throws SolverError when Kpp is singular (degenerate permittivity).
  explicit Condensation(const GuidedMatrices& m);
  Eigen::VectorXcd potential(const Eigen::VectorXcd& u) const;
  Eigen::VectorXcd apply(const Eigen::VectorXcd& u) const;
  /// Dense condensed stiffness (small problems and tests).
  Eigen::MatrixXcd dense() const;

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
};

/// Per-node complex fields of one solution.
struct FieldSolution {
  std::shared_ptr<const Mesh2D> mesh;
  Eigen::VectorXcd ux, uy, uz;  // m
  Eigen::VectorXcd phi;         // V (zero when there is no potential)
  double beta = 0.0;            // rad/m
  double omega = 0.0;           // rad/s

  void scale(cd factor);
  /// Makes the largest-magnitude displacement entry real and positive; returns
  /// the unit factor applied.
  cd fix_phase();
};

/// Scatters unknown vectors onto nodes (constrained entries are zero).
FieldSolution expand(const GuidedProblem& p, const Eigen::VectorXcd& u, const Eigen::VectorXcd& phi, double beta,
                     double omega);

// ---------------------------------------------------------------------------
// Energies (per unit propagation length)

struct EnergyBreakdown {
  double kinetic = 0.0;        // J/m
  double strain = 0.0;         // J/m
  double electrostatic = 0.0;  // J/m
  double total() const { return kinetic + strain + electrostatic; }
};

/// Time-averaged energies. With `region` set only that region's elements count.
EnergyBreakdown mode_energy(const FieldSolution& sol, const RegionMaterials& mats,
                            std::optional<Region> region = std::nullopt);

/// Energy of elements touching a clamped node divided by the total.
double boundary_energy_fraction(const FieldSolution& sol, const RegionMaterials& mats);

/// Integrals of rho * conj(a_c) b_c per displacement component c over solid regions.
Eigen::Vector3cd mass_products(const FieldSolution& a, const FieldSolution& b, const RegionMaterials& mats);

}  // namespace qad::fem
