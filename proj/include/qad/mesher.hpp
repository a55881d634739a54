#pragma once

#include "qad/mesh.hpp"

namespace qad::fem {

/// Ridge waveguide cross-section: LN film of thickness `thickness` etched by
/// `etch_depth` (== thickness for a fully etched ridge) on a substrate box.
struct RidgeGeometry {
  double width = 500e-9;
  double thickness = 200e-9;
  double etch_depth = 200e-9;
  double substrate_depth = 0.0;   // 0: 6 x thickness
  double substrate_margin = 0.0;  // lateral substrate/vacuum margin each side, 0: 6 x thickness
  double vacuum_height = 0.0;     // 0: 3 x thickness

  double depth() const { return substrate_depth > 0 ? substrate_depth : 6.0 * thickness; }
  double margin() const { return substrate_margin > 0 ? substrate_margin : 6.0 * thickness; }
  double vacuum() const { return vacuum_height > 0 ? vacuum_height : 3.0 * thickness; }
  /// Throws InputError for non-positive lengths or etch depth outside (0, thickness].
  void validate() const;
};

/// Element counts of the structured ridge mesh. Counts are independent of the
/// ridge width so meshes at different widths share their topology.
struct RidgeMeshCounts {
  int ridge_x = 6;
  int margin_x = 4;
  int substrate_y = 6;
  int slab_y = 2;
  int ridge_y = 3;
  int vacuum_y = 3;

  /// Level 1 is the coarse desk-scale mesh; each level scales counts by 1.5x.
  static RidgeMeshCounts level(int level, double width_over_thickness = 2.5);
};

Mesh2D build_ridge_mesh(const RidgeGeometry& g, const RidgeMeshCounts& counts, int order = 2);

/// One finger-pair period of a single-electrode IDT in the sagittal (z, y)
/// plane: mesh x is the propagation coordinate z in [0, period).
struct IdtCellGeometry {
  double period = 730e-9;
  double finger_width = 182.5e-9;
  double metal_thickness = 50e-9;
  double film_thickness = 200e-9;
  double substrate_depth = 0.0;  // 0: 2 x period
  double vacuum_height = 0.0;    // 0: 2 x period
  int density = 1;

  /// Centres of the + and - fingers.
  double positive_centre() const { return 0.25 * period; }
  double negative_centre() const { return 0.75 * period; }
  void validate() const;
};

Mesh2D build_idt_cell_mesh(const IdtCellGeometry& g, int order = 2);

}  // namespace qad::fem
