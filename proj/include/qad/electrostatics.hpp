#pragma once

#include "qad/mesh.hpp"

#include <map>
#include <memory>
#include <optional>

namespace qad::fem {

/// In-plane (2x2, mesh axes) permittivity per region, F/m. Vacuum defaults to
/// eps0; metal elements are conductors and are not assembled.
using PermittivityMap = std::map<Region, Eigen::Matrix2d>;

struct ElectrostaticResult {
  std::shared_ptr<const Mesh2D> mesh;
  Eigen::VectorXd potential;  // V, per node
  double v_pos = 1.0;
  double v_neg = 0.0;
  double energy = 0.0;       // J/m, 1/2 int E.D over the dielectric
  double capacitance = 0.0;  // F/m, from energy = 1/2 C dV^2
  double charge_pos = 0.0;   // C/m
  double charge_neg = 0.0;
};

/// Solves div(eps grad phi) = 0 with electrode+ / electrode- edges held at the
/// given voltages and a natural (charge-free) condition elsewhere. Throws
/// InputError without two distinctly biased electrodes.
ElectrostaticResult solve_electrostatic(std::shared_ptr<const Mesh2D> mesh, const PermittivityMap& eps,
                                        double v_pos = 1.0, double v_neg = 0.0);

/// Point evaluation of a nodal scalar field (potential and its gradient).
class ScalarSampler {
 public:
  ScalarSampler(std::shared_ptr<const Mesh2D> mesh, Eigen::VectorXd values);
  std::optional<double> value(const Eigen::Vector2d& p) const;
  std::optional<Eigen::Vector2d> gradient(const Eigen::Vector2d& p) const;

 private:
  std::shared_ptr<const Mesh2D> mesh_;
  Eigen::VectorXd values_;
  PointLocator locator_;
};

}  // namespace qad::fem
