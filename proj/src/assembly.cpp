#include "qad/constants.hpp"
#include "qad/errors.hpp"
#include "qad/fem.hpp"
#include "shape.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>

namespace qad::fem {

using materials::MaterialRecord;

const MaterialRecord* RegionMaterials::find(Region r) const {
  switch (r) {
    case Region::waveguide:
      return waveguide ? &*waveguide : nullptr;
    case Region::substrate:
      return substrate ? &*substrate : nullptr;
    default:
      return nullptr;
  }
}

bool RegionMaterials::piezoelectric() const {
  return (waveguide && waveguide->piezoelectric) || (substrate && substrate->piezoelectric);
}

namespace {

bool is_solid(Region r) { return r == Region::waveguide || r == Region::substrate; }

}  // namespace

GuidedProblem::GuidedProblem(std::shared_ptr<const Mesh2D> mesh, RegionMaterials mats, std::vector<int> grounded)
    : mesh_(std::move(mesh)), materials_(std::move(mats)) {
  if (!mesh_) throw InputError("guided problem needs a mesh");
  const Mesh2D& m = *mesh_;
  const int nn = static_cast<int>(m.nodes.size());
  const int npe = m.nodes_per_element();
  rep_ = m.representatives();

  std::vector<char> solid(nn, 0), used(nn, 0), clamped(nn, 0);
  for (const auto& el : m.elements) {
    if (el.region == Region::metal)
      throw InputError("metal elements are not part of the guided-mode problem");
    if (is_solid(el.region) && !materials_.find(el.region))
      throw InputError("no material assigned to region '" + std::string(to_string(el.region)) + "'");
    for (int k = 0; k < npe; ++k) {
      used[rep_[el.nodes[k]]] = 1;
      if (is_solid(el.region)) solid[rep_[el.nodes[k]]] = 1;
    }
  }
  for (const auto& e : m.boundary)
    if (e.tag == BoundaryTag::fixed)
      for (int k = 0; k < m.nodes_per_edge(); ++k) clamped[rep_[e.nodes[k]]] = 1;

  u_index_.assign(3 * nn, -1);
  for (int i = 0; i < nn; ++i) {
    if (rep_[i] != i || !solid[i] || clamped[i]) continue;
    for (int c = 0; c < 3; ++c) u_index_[3 * i + c] = n_u_++;
  }

  has_phi_ = materials_.piezoelectric();
  phi_index_.assign(nn, -1);
  if (has_phi_) {
    std::vector<char> ground = clamped;
    for (int g : grounded) {
      if (g < 0 || g >= nn) throw InputError("grounded node index out of range");
      ground[rep_[g]] = 1;
    }
    for (int i = 0; i < nn; ++i)
      if (rep_[i] == i && used[i] && !ground[i]) phi_index_[i] = n_phi_++;
  }
}

GuidedMatrices assemble_guided(const GuidedProblem& p, double beta) {
  if (!std::isfinite(beta)) throw InputError("beta must be finite");
  const Mesh2D& mesh = p.mesh();
  const int npe = mesh.nodes_per_element();
  const auto& rule = detail::triangle_rule();
  const cd ib(0.0, beta);

  std::vector<Eigen::Triplet<cd>> tuu, tup, tpp;
  std::vector<Eigen::Triplet<double>> tm;
  tuu.reserve(mesh.elements.size() * 18 * 18);
  tm.reserve(mesh.elements.size() * 18 * 6);
  if (p.has_potential()) {
    tup.reserve(mesh.elements.size() * 18 * 6);
    tpp.reserve(mesh.elements.size() * 36);
  }

  Eigen::MatrixXcd Bu(6, 3 * npe), Bp(3, npe);
  Eigen::MatrixXcd kuu(3 * npe, 3 * npe), kup(3 * npe, npe), kpp(npe, npe);
  Eigen::MatrixXd me(npe, npe);
  std::array<int, 18> ui{};
  std::array<int, 6> pi_{};

  const Eigen::Matrix3d eps_vac = constants::vacuum_permittivity * Eigen::Matrix3d::Identity();

  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    const Element& el = mesh.elements[e];
    const MaterialRecord* mat = p.materials().find(el.region);
    const bool solid = mat != nullptr;
    if (!solid && !p.has_potential()) continue;

    const auto xy = mesh.element_coordinates(static_cast<int>(e));
    const auto geo = detail::triangle_geometry(xy[0], xy[1], xy[2]);
    const bool piezo = solid && mat->piezoelectric && p.has_potential();
    const Eigen::Matrix3d& eps = solid ? mat->permittivity.eps : eps_vac;

    kuu.setZero();
    kup.setZero();
    kpp.setZero();
    me.setZero();
    for (const auto& q : rule) {
      const auto s = detail::evaluate_shape(mesh.order(), geo, q.l);
      const double w = q.w * geo.area;
      Bp.setZero();
      for (int a = 0; a < npe; ++a) {
        Bp(0, a) = s.dx[a];
        Bp(1, a) = s.dy[a];
        Bp(2, a) = ib * s.N[a];
      }
      if (p.has_potential()) kpp.noalias() += w * (Bp.adjoint() * eps * Bp);
      if (!solid) continue;
      Bu.setZero();
      for (int a = 0; a < npe; ++a) {
        const int c = 3 * a;
        Bu(0, c) = s.dx[a];
        Bu(1, c + 1) = s.dy[a];
        Bu(2, c + 2) = ib * s.N[a];
        Bu(3, c + 2) = s.dy[a];
        Bu(3, c + 1) = ib * s.N[a];
        Bu(4, c + 2) = s.dx[a];
        Bu(4, c) = ib * s.N[a];
        Bu(5, c + 1) = s.dx[a];
        Bu(5, c) = s.dy[a];
      }
      kuu.noalias() += w * (Bu.adjoint() * mat->stiffness.c * Bu);
      if (piezo) kup.noalias() += w * (Bu.adjoint() * mat->piezo.e.transpose() * Bp);
      for (int a = 0; a < npe; ++a)
        for (int b = 0; b < npe; ++b) me(a, b) += w * mat->density * s.N[a] * s.N[b];
    }

    for (int a = 0; a < npe; ++a) {
      for (int c = 0; c < 3; ++c) ui[3 * a + c] = p.u_index(el.nodes[a], c);
      pi_[a] = p.has_potential() ? p.phi_index(el.nodes[a]) : -1;
    }
    if (solid) {
      for (int r = 0; r < 3 * npe; ++r) {
        if (ui[r] < 0) continue;
        for (int c = 0; c < 3 * npe; ++c)
          if (ui[c] >= 0) tuu.emplace_back(ui[r], ui[c], kuu(r, c));
        if (piezo)
          for (int c = 0; c < npe; ++c)
            if (pi_[c] >= 0) tup.emplace_back(ui[r], pi_[c], kup(r, c));
      }
      for (int a = 0; a < npe; ++a)
        for (int b = 0; b < npe; ++b)
          for (int c = 0; c < 3; ++c) {
            const int r = ui[3 * a + c], k = ui[3 * b + c];
            if (r >= 0 && k >= 0) tm.emplace_back(r, k, me(a, b));
          }
    }
    if (p.has_potential())
      for (int a = 0; a < npe; ++a) {
        if (pi_[a] < 0) continue;
        for (int b = 0; b < npe; ++b)
          if (pi_[b] >= 0) tpp.emplace_back(pi_[a], pi_[b], kpp(a, b));
      }
  }

  GuidedMatrices out;
  out.beta = beta;
  const int nu = p.displacement_unknowns(), np = p.potential_unknowns();
  out.kuu.resize(nu, nu);
  out.kuu.setFromTriplets(tuu.begin(), tuu.end());
  out.m.resize(nu, nu);
  out.m.setFromTriplets(tm.begin(), tm.end());
  out.kup.resize(nu, np);
  out.kup.setFromTriplets(tup.begin(), tup.end());
  out.kpp.resize(np, np);
  out.kpp.setFromTriplets(tpp.begin(), tpp.end());
  return out;
}

// ---------------------------------------------------------------------------

struct Condensation::Impl {
  SparseC kuu, kup;
  Eigen::SimplicialLDLT<SparseC> kpp;
  bool empty = true;
};

Condensation::Condensation(const GuidedMatrices& m) {
  auto impl = std::make_shared<Impl>();
  impl->kuu = m.kuu;
  impl->kup = m.kup;
  impl->empty = m.kpp.rows() == 0;
  if (!impl->empty) {
    impl->kpp.compute(m.kpp);
    const Eigen::VectorXd d = impl->kpp.vectorD().real();
    if (impl->kpp.info() != Eigen::Success || d.minCoeff() <= 1e-12 * d.cwiseAbs().maxCoeff())
      throw SolverError("singular condensation block: permittivity matrix is degenerate");
  }
  impl_ = std::move(impl);
}

Eigen::VectorXcd Condensation::potential(const Eigen::VectorXcd& u) const {
  if (impl_->empty) return {};
  Eigen::VectorXcd rhs = impl_->kup.adjoint() * u;
  return impl_->kpp.solve(rhs);
}

Eigen::VectorXcd Condensation::apply(const Eigen::VectorXcd& u) const {
  Eigen::VectorXcd y = impl_->kuu * u;
  if (!impl_->empty) y += impl_->kup * potential(u);
  return y;
}

Eigen::MatrixXcd Condensation::dense() const {
  Eigen::MatrixXcd k = Eigen::MatrixXcd(impl_->kuu);
  if (!impl_->empty) {
    Eigen::MatrixXcd rhs = Eigen::MatrixXcd(impl_->kup.adjoint());
    Eigen::MatrixXcd x = impl_->kpp.solve(rhs);
    k += impl_->kup * x;
  }
  // Exact Hermitian part; the residual asymmetry is round-off.
  return 0.5 * (k + k.adjoint());
}

// ---------------------------------------------------------------------------

void FieldSolution::scale(cd f) {
  ux *= f;
  uy *= f;
  uz *= f;
  phi *= f;
}

cd FieldSolution::fix_phase() {
  double best = -1.0;
  cd ref(0.0);
  for (const auto* v : {&ux, &uy, &uz})
    for (Eigen::Index i = 0; i < v->size(); ++i)
      if (std::abs((*v)(i)) > best * (1 + 1e-12)) {
        best = std::abs((*v)(i));
        ref = (*v)(i);
      }
  const cd f = best > 0 ? std::conj(ref) / best : cd(1.0);
  scale(f);
  return f;
}

FieldSolution expand(const GuidedProblem& p, const Eigen::VectorXcd& u, const Eigen::VectorXcd& phi, double beta,
                     double omega) {
  const auto nn = static_cast<Eigen::Index>(p.mesh().nodes.size());
  FieldSolution s;
  s.mesh = p.mesh_ptr();
  s.beta = beta;
  s.omega = omega;
  s.ux = Eigen::VectorXcd::Zero(nn);
  s.uy = Eigen::VectorXcd::Zero(nn);
  s.uz = Eigen::VectorXcd::Zero(nn);
  s.phi = Eigen::VectorXcd::Zero(nn);
  for (Eigen::Index i = 0; i < nn; ++i) {
    const int n = static_cast<int>(i);
    int k;
    if ((k = p.u_index(n, 0)) >= 0) s.ux(i) = u(k);
    if ((k = p.u_index(n, 1)) >= 0) s.uy(i) = u(k);
    if ((k = p.u_index(n, 2)) >= 0) s.uz(i) = u(k);
    if (p.has_potential() && phi.size() > 0 && (k = p.phi_index(n)) >= 0) s.phi(i) = phi(k);
  }
  return s;
}

}  // namespace qad::fem
