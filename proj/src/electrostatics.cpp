#include "qad/electrostatics.hpp"

#include "qad/constants.hpp"
#include "qad/errors.hpp"
#include "shape.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <numeric>

namespace qad::fem {

namespace {

int find_root(std::vector<int>& parent, int i) {
  while (parent[i] != i) i = parent[i] = parent[parent[i]];
  return i;
}

}  // namespace

ElectrostaticResult solve_electrostatic(std::shared_ptr<const Mesh2D> mesh_ptr, const PermittivityMap& eps,
                                        double v_pos, double v_neg) {
  if (!mesh_ptr) throw InputError("electrostatic solve needs a mesh");
  const Mesh2D& mesh = *mesh_ptr;
  if (!(v_pos != v_neg)) throw InputError("electrode voltages must differ");
  const int nn = static_cast<int>(mesh.nodes.size());
  const int npe = mesh.nodes_per_element();
  const auto rep = mesh.representatives();

  // Dirichlet values: 0 free, 1 electrode+, 2 electrode-.
  std::vector<char> kind(nn, 0);
  bool has_pos = false, has_neg = false;
  for (const auto& e : mesh.boundary) {
    if (e.tag != BoundaryTag::electrode_pos && e.tag != BoundaryTag::electrode_neg) continue;
    const bool pos = e.tag == BoundaryTag::electrode_pos;
    (pos ? has_pos : has_neg) = true;
    for (int k = 0; k < mesh.nodes_per_edge(); ++k) {
      char& c = kind[rep[e.nodes[k]]];
      const char want = pos ? 1 : 2;
      if (c != 0 && c != want) throw InputError("node shared by electrodes of opposite polarity");
      c = want;
    }
  }
  if (!has_pos && !has_neg) throw InputError("no electrode edges tagged in the mesh");
  if (!has_pos || !has_neg) throw InputError("both electrode+ and electrode- edges are required");

  auto region_eps = [&](Region r) -> Eigen::Matrix2d {
    auto it = eps.find(r);
    if (it != eps.end()) return it->second;
    if (r == Region::vacuum) return constants::vacuum_permittivity * Eigen::Matrix2d::Identity();
    throw InputError("no permittivity given for region '" + std::string(to_string(r)) + "'");
  };

  std::vector<char> used(nn, 0);
  for (const auto& el : mesh.elements)
    if (el.region != Region::metal)
      for (int k = 0; k < npe; ++k) used[rep[el.nodes[k]]] = 1;

  std::vector<int> index(nn, -1);
  int nf = 0;
  for (int i = 0; i < nn; ++i)
    if (rep[i] == i && used[i] && kind[i] == 0) index[i] = nf++;

  auto value_of = [&](char k) { return k == 1 ? v_pos : v_neg; };

  // Full stiffness on representatives; Dirichlet columns move to the right-hand side.
  std::vector<Eigen::Triplet<double>> tk, tall;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nf);
  const auto& rule = detail::triangle_rule();
  Eigen::MatrixXd ke(npe, npe);
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    const Element& el = mesh.elements[e];
    if (el.region == Region::metal) continue;
    const Eigen::Matrix2d ep = region_eps(el.region);
    const auto xy = mesh.element_coordinates(static_cast<int>(e));
    const auto geo = detail::triangle_geometry(xy[0], xy[1], xy[2]);
    ke.setZero();
    for (const auto& q : rule) {
      const auto s = detail::evaluate_shape(mesh.order(), geo, q.l);
      for (int a = 0; a < npe; ++a)
        for (int b = 0; b < npe; ++b) {
          const Eigen::Vector2d ga(s.dx[a], s.dy[a]), gb(s.dx[b], s.dy[b]);
          ke(a, b) += q.w * geo.area * ga.dot(ep * gb);
        }
    }
    for (int a = 0; a < npe; ++a) {
      const int ra = rep[el.nodes[a]];
      for (int b = 0; b < npe; ++b) {
        const int rb = rep[el.nodes[b]];
        tall.emplace_back(ra, rb, ke(a, b));
        if (index[ra] < 0) continue;
        if (index[rb] >= 0)
          tk.emplace_back(index[ra], index[rb], ke(a, b));
        else
          rhs(index[ra]) -= ke(a, b) * value_of(kind[rb]);
      }
    }
  }

  Eigen::VectorXd phi = Eigen::VectorXd::Zero(nn);
  for (int i = 0; i < nn; ++i)
    if (kind[i] != 0) phi(i) = value_of(kind[i]);
  if (nf > 0) {
    Eigen::SparseMatrix<double> K(nf, nf);
    K.setFromTriplets(tk.begin(), tk.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(K);
    if (ldlt.info() != Eigen::Success) throw SolverError("electrostatic system is singular");
    const Eigen::VectorXd x = ldlt.solve(rhs);
    for (int i = 0; i < nn; ++i)
      if (index[i] >= 0) phi(i) = x(index[i]);
  }

  // Conductor interiors take the voltage of the electrode they touch.
  std::vector<int> parent(nn);
  std::iota(parent.begin(), parent.end(), 0);
  for (const auto& el : mesh.elements) {
    if (el.region != Region::metal) continue;
    for (int k = 1; k < npe; ++k) {
      const int a = find_root(parent, rep[el.nodes[0]]), b = find_root(parent, rep[el.nodes[k]]);
      if (a != b) parent[b] = a;
    }
  }
  std::vector<char> comp_kind(nn, 0);
  for (int i = 0; i < nn; ++i)
    if (rep[i] == i && kind[i] != 0) comp_kind[find_root(parent, i)] = kind[i];
  for (const auto& el : mesh.elements) {
    if (el.region != Region::metal) continue;
    for (int k = 0; k < npe; ++k) {
      const int r = rep[el.nodes[k]];
      if (index[r] < 0 && kind[r] == 0 && comp_kind[find_root(parent, r)] != 0)
        phi(r) = value_of(comp_kind[find_root(parent, r)]);
    }
  }
  for (int i = 0; i < nn; ++i) phi(i) = phi(rep[i]);

  ElectrostaticResult out;
  out.mesh = mesh_ptr;
  out.v_pos = v_pos;
  out.v_neg = v_neg;
  Eigen::SparseMatrix<double> Kall(nn, nn);
  Kall.setFromTriplets(tall.begin(), tall.end());
  Eigen::VectorXd phi_rep = Eigen::VectorXd::Zero(nn);
  for (int i = 0; i < nn; ++i)
    if (rep[i] == i) phi_rep(i) = phi(i);
  const Eigen::VectorXd reaction = Kall * phi_rep;
  for (int i = 0; i < nn; ++i) {
    if (kind[i] == 1) out.charge_pos += reaction(i);
    if (kind[i] == 2) out.charge_neg += reaction(i);
  }

  // Field energy by direct quadrature of 1/2 E.D.
  double w = 0.0;
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    const Element& el = mesh.elements[e];
    if (el.region == Region::metal) continue;
    const Eigen::Matrix2d ep = region_eps(el.region);
    const auto xy = mesh.element_coordinates(static_cast<int>(e));
    const auto geo = detail::triangle_geometry(xy[0], xy[1], xy[2]);
    for (const auto& q : rule) {
      const auto s = detail::evaluate_shape(mesh.order(), geo, q.l);
      Eigen::Vector2d g = Eigen::Vector2d::Zero();
      for (int a = 0; a < npe; ++a) g += phi(el.nodes[a]) * Eigen::Vector2d(s.dx[a], s.dy[a]);
      w += 0.5 * q.w * geo.area * g.dot(ep * g);
    }
  }
  out.energy = w;
  const double dv = v_pos - v_neg;
  out.capacitance = 2.0 * w / (dv * dv);
  out.potential = std::move(phi);
  return out;
}

// ---------------------------------------------------------------------------

ScalarSampler::ScalarSampler(std::shared_ptr<const Mesh2D> mesh, Eigen::VectorXd values)
    : mesh_(std::move(mesh)), values_(std::move(values)), locator_(*mesh_) {
  if (values_.size() != static_cast<Eigen::Index>(mesh_->nodes.size()))
    throw InputError("sampled field does not match mesh size");
}

std::optional<double> ScalarSampler::value(const Eigen::Vector2d& p) const {
  const auto hit = locator_.locate(p);
  if (!hit) return std::nullopt;
  const auto& el = mesh_->elements[hit->first];
  const auto xy = mesh_->element_coordinates(hit->first);
  const auto geo = detail::triangle_geometry(xy[0], xy[1], xy[2]);
  const auto s = detail::evaluate_shape(mesh_->order(), geo, hit->second);
  double v = 0.0;
  for (int a = 0; a < s.n; ++a) v += s.N[a] * values_(el.nodes[a]);
  return v;
}

std::optional<Eigen::Vector2d> ScalarSampler::gradient(const Eigen::Vector2d& p) const {
  const auto hit = locator_.locate(p);
  if (!hit) return std::nullopt;
  const auto& el = mesh_->elements[hit->first];
  const auto xy = mesh_->element_coordinates(hit->first);
  const auto geo = detail::triangle_geometry(xy[0], xy[1], xy[2]);
  const auto s = detail::evaluate_shape(mesh_->order(), geo, hit->second);
  Eigen::Vector2d g = Eigen::Vector2d::Zero();
  for (int a = 0; a < s.n; ++a) g += values_(el.nodes[a]) * Eigen::Vector2d(s.dx[a], s.dy[a]);
  return g;
}

}  // namespace qad::fem
