#include "qad/constants.hpp"
#include "qad/errors.hpp"
#include "qad/fem.hpp"
#include "shape.hpp"


namespace qad::fem {

namespace {

struct PointFields {
  Eigen::Vector3cd u;
  Eigen::Matrix<cd, 6, 1> S;
  Eigen::Vector3cd grad_phi;
};

PointFields evaluate(const FieldSolution& sol, const Element& el, const detail::ShapeEval& s) {
  const cd ib(0.0, sol.beta);
  PointFields f;
  f.u.setZero();
  Eigen::Vector3cd dx = Eigen::Vector3cd::Zero(), dy = Eigen::Vector3cd::Zero();
  f.grad_phi.setZero();
  cd phi(0.0);
  for (int a = 0; a < s.n; ++a) {
    const int n = el.nodes[a];
    const Eigen::Vector3cd ua(sol.ux(n), sol.uy(n), sol.uz(n));
    f.u += s.N[a] * ua;
    dx += s.dx[a] * ua;
    dy += s.dy[a] * ua;
    f.grad_phi(0) += s.dx[a] * sol.phi(n);
    f.grad_phi(1) += s.dy[a] * sol.phi(n);
    phi += s.N[a] * sol.phi(n);
  }
  f.grad_phi(2) = ib * phi;
  const Eigen::Vector3cd dz = ib * f.u;
  f.S << dx(0), dy(1), dz(2), dy(2) + dz(1), dx(2) + dz(0), dx(1) + dy(0);
  return f;
}

void check(const FieldSolution& sol) {
  if (!sol.mesh) throw InputError("field solution has no mesh");
  const auto nn = static_cast<Eigen::Index>(sol.mesh->nodes.size());
  if (sol.ux.size() != nn || sol.uy.size() != nn || sol.uz.size() != nn || sol.phi.size() != nn)
    throw InputError("field solution size does not match its mesh");
}

template <class F>
void for_each_point(const FieldSolution& sol, const RegionMaterials& mats, std::optional<Region> region, F&& f) {
  const Mesh2D& mesh = *sol.mesh;
  const auto& rule = detail::triangle_rule();
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    const Element& el = mesh.elements[e];
    if (el.region == Region::metal) continue;
    if (region && el.region != *region) continue;
    const auto xy = mesh.element_coordinates(static_cast<int>(e));
    const auto geo = detail::triangle_geometry(xy[0], xy[1], xy[2]);
    const auto* mat = mats.find(el.region);
    for (const auto& q : rule) {
      const auto s = detail::evaluate_shape(mesh.order(), geo, q.l);
      f(static_cast<int>(e), mat, evaluate(sol, el, s), q.w * geo.area);
    }
  }
}

EnergyBreakdown point_energy(const materials::MaterialRecord* mat, const PointFields& p, double omega) {
  EnergyBreakdown out;
  if (mat) {
    out.kinetic = 0.5 * omega * omega * mat->density * p.u.squaredNorm();
    const Eigen::Matrix<cd, 6, 1> T =
        mat->stiffness.c.cast<cd>() * p.S + mat->piezo.e.transpose().cast<cd>() * p.grad_phi;
    out.strain = 0.5 * std::real(p.S.dot(T));  // dot conjugates the first argument
    const Eigen::Vector3cd E = -p.grad_phi;
    const Eigen::Vector3cd D = mat->permittivity.eps.cast<cd>() * E + mat->piezo.e.cast<cd>() * p.S;
    out.electrostatic = 0.5 * std::real(E.dot(D));
  } else {
    out.electrostatic = 0.5 * constants::vacuum_permittivity * p.grad_phi.squaredNorm();
  }
  return out;
}

}  // namespace

EnergyBreakdown mode_energy(const FieldSolution& sol, const RegionMaterials& mats, std::optional<Region> region) {
  check(sol);
  EnergyBreakdown total;
  for_each_point(sol, mats, region, [&](int, const materials::MaterialRecord* mat, const PointFields& p, double w) {
    const auto e = point_energy(mat, p, sol.omega);
    total.kinetic += w * e.kinetic;
    total.strain += w * e.strain;
    total.electrostatic += w * e.electrostatic;
  });
  return total;
}

double boundary_energy_fraction(const FieldSolution& sol, const RegionMaterials& mats) {
  check(sol);
  const Mesh2D& mesh = *sol.mesh;
  std::vector<char> clamped(mesh.nodes.size(), 0);
  for (const auto& e : mesh.boundary)
    if (e.tag == BoundaryTag::fixed)
      for (int k = 0; k < mesh.nodes_per_edge(); ++k) clamped[e.nodes[k]] = 1;
  std::vector<char> touching(mesh.elements.size(), 0);
  for (std::size_t e = 0; e < mesh.elements.size(); ++e)
    for (int k = 0; k < mesh.nodes_per_element(); ++k)
      if (clamped[mesh.elements[e].nodes[k]]) touching[e] = 1;

  double edge = 0.0, all = 0.0;
  for_each_point(sol, mats, std::nullopt,
                 [&](int e, const materials::MaterialRecord* mat, const PointFields& p, double w) {
                   if (!mat) return;
                   const auto en = point_energy(mat, p, sol.omega);
                   const double v = w * (en.kinetic + en.strain);
                   all += v;
                   if (touching[e]) edge += v;
                 });
  return all > 0 ? edge / all : 0.0;
}

Eigen::Vector3cd mass_products(const FieldSolution& a, const FieldSolution& b, const RegionMaterials& mats) {
  check(a);
  check(b);
  if (a.mesh->nodes.size() != b.mesh->nodes.size() || a.mesh->elements.size() != b.mesh->elements.size())
    throw InputError("mass products need fields on the same mesh topology");
  const Mesh2D& mesh = *a.mesh;
  const auto& rule = detail::triangle_rule();
  Eigen::Vector3cd out = Eigen::Vector3cd::Zero();
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    const Element& el = mesh.elements[e];
    const auto* mat = mats.find(el.region);
    if (!mat) continue;
    const auto xy = mesh.element_coordinates(static_cast<int>(e));
    const auto geo = detail::triangle_geometry(xy[0], xy[1], xy[2]);
    for (const auto& q : rule) {
      const auto s = detail::evaluate_shape(mesh.order(), geo, q.l);
      Eigen::Vector3cd ua = Eigen::Vector3cd::Zero(), ub = Eigen::Vector3cd::Zero();
      for (int k = 0; k < s.n; ++k) {
        const int n = el.nodes[k];
        ua += s.N[k] * Eigen::Vector3cd(a.ux(n), a.uy(n), a.uz(n));
        ub += s.N[k] * Eigen::Vector3cd(b.ux(n), b.uy(n), b.uz(n));
      }
      out += (q.w * geo.area * mat->density) * ua.conjugate().cwiseProduct(ub);
    }
  }
  return out;
}

}  // namespace qad::fem
