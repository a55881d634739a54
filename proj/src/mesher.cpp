#include "qad/mesher.hpp"

#include "qad/errors.hpp"

#include <algorithm>
#include <cmath>

namespace qad::fem {

void RidgeGeometry::validate() const {
  if (!(width > 0)) throw InputError("geometry.width must be positive");
  if (!(thickness > 0)) throw InputError("geometry.thickness must be positive");
  if (!(etch_depth > 0) || etch_depth > thickness * (1 + 1e-12))
    throw InputError("geometry.etch_depth must lie in (0, thickness]");
  if (substrate_depth < 0 || substrate_margin < 0 || vacuum_height < 0)
    throw InputError("geometry box sizes must be non-negative");
  if (depth() < 6.0 * thickness * (1 - 1e-12))
    throw InputError("geometry.substrate_depth must be at least 6 x thickness");
}

RidgeMeshCounts RidgeMeshCounts::level(int level, double width_over_thickness) {
  if (level < 1) throw InputError("mesh density level must be >= 1");
  const double f = std::pow(1.5, level - 1);
  auto scale = [f](double n) { return std::max(1, static_cast<int>(std::lround(n * f))); };
  RidgeMeshCounts c;
  c.ridge_x = scale(std::max(4.0, 2.4 * width_over_thickness));
  c.margin_x = scale(4);
  c.substrate_y = scale(6);
  c.slab_y = scale(2);
  c.ridge_y = scale(3);
  c.vacuum_y = scale(3);
  return c;
}

Mesh2D build_ridge_mesh(const RidgeGeometry& g, const RidgeMeshCounts& n, int order) {
  g.validate();
  const double hw = 0.5 * g.width;
  const double t = g.thickness;
  const double slab = t - g.etch_depth;
  const bool has_slab = slab > 1e-12 * t;

  GridSpec spec;
  spec.order = order;
  spec.mirror_x = 0.0;
  spec.x = join({graded(-hw, -hw - g.margin(), n.margin_x, 1.6), graded(-hw, hw, n.ridge_x, 1.0),
                 graded(hw, hw + g.margin(), n.margin_x, 1.6)});
  if (has_slab) {
    spec.y = join({graded(0.0, -g.depth(), n.substrate_y, 1.5), graded(0.0, slab, n.slab_y, 1.0),
                   graded(slab, t, n.ridge_y, 1.0), graded(t, t + g.vacuum(), n.vacuum_y, 1.6)});
  } else {
    spec.y = join({graded(0.0, -g.depth(), n.substrate_y, 1.5), graded(0.0, t, n.ridge_y, 1.0),
                   graded(t, t + g.vacuum(), n.vacuum_y, 1.6)});
  }

  auto region = [=](double xc, double yc) -> std::optional<Region> {
    if (yc < 0) return Region::substrate;
    if (has_slab && yc < slab) return Region::waveguide;
    if (yc < t && std::abs(xc) < hw) return Region::waveguide;
    return Region::vacuum;
  };
  auto tag = [](const EdgeInfo& e) -> std::optional<BoundaryTag> {
    if (!e.outside) {
      if (e.inside == Region::vacuum) return std::nullopt;
      return BoundaryTag::fixed;
    }
    const bool a_solid = e.inside != Region::vacuum;
    const bool b_solid = *e.outside != Region::vacuum;
    if (a_solid != b_solid) return BoundaryTag::free_surface;
    return std::nullopt;
  };
  return build_structured(spec, region, tag);
}

void IdtCellGeometry::validate() const {
  if (!(period > 0)) throw InputError("idt.period must be positive");
  if (!(finger_width > 0) || finger_width >= 0.5 * period)
    throw InputError("idt finger width must lie in (0, period/2)");
  if (!(metal_thickness > 0)) throw InputError("idt.metal_thickness must be positive");
  if (!(film_thickness > 0)) throw InputError("film thickness must be positive");
  if (density < 1) throw InputError("idt mesh density must be >= 1");
}

Mesh2D build_idt_cell_mesh(const IdtCellGeometry& g, int order) {
  g.validate();
  const double b = g.period;
  const double hf = 0.5 * g.finger_width;
  const double z1 = g.positive_centre(), z2 = g.negative_centre();
  const double depth = g.substrate_depth > 0 ? g.substrate_depth : 2.0 * b;
  const double vac = g.vacuum_height > 0 ? g.vacuum_height : 2.0 * b;
  const int d = g.density;
  const double t = g.film_thickness, h = g.metal_thickness;

  // Cells per segment scale with its length, at least two per segment.
  const double target = b / (16.0 * d);
  auto seg = [&](double a, double c) {
    const int n = std::max(2, static_cast<int>(std::ceil((c - a) / target - 1e-9)));
    return graded(a, c, n, 1.0);
  };
  GridSpec spec;
  spec.order = order;
  spec.periodic_x = true;
  spec.mirror_x = 0.5 * b;
  spec.x = join({seg(0.0, z1 - hf), seg(z1 - hf, z1 + hf), seg(z1 + hf, z2 - hf), seg(z2 - hf, z2 + hf),
                 seg(z2 + hf, b)});
  const int ny_film = std::max(3, static_cast<int>(std::ceil(t / target - 1e-9)));
  spec.y = join({graded(0.0, -depth, 6 * d, 1.5), graded(0.0, t, ny_film, 1.0), graded(t, t + h, 2 * d, 1.0),
                 graded(t + h, t + h + vac, 6 * d, 1.5)});

  auto in_finger = [=](double z) { return std::abs(z - z1) < hf || std::abs(z - z2) < hf; };
  auto region = [=](double zc, double yc) -> std::optional<Region> {
    if (yc < 0) return Region::substrate;
    if (yc < t) return Region::waveguide;
    if (yc < t + h && in_finger(zc)) return Region::metal;
    return Region::vacuum;
  };
  auto tag = [=](const EdgeInfo& e) -> std::optional<BoundaryTag> {
    const bool a_metal = e.inside == Region::metal;
    const bool b_metal = e.outside && *e.outside == Region::metal;
    if (a_metal == b_metal) return std::nullopt;
    const double zc = 0.5 * (e.a.x() + e.b.x());
    return zc < 0.5 * b ? BoundaryTag::electrode_pos : BoundaryTag::electrode_neg;
  };
  return build_structured(spec, region, tag);
}

}  // namespace qad::fem
