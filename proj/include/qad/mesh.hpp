#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qad::fem {

enum class Region : std::uint8_t { waveguide, substrate, metal, vacuum };
enum class BoundaryTag : std::uint8_t { free_surface, fixed, electrode_pos, electrode_neg };

std::string_view to_string(Region r);
std::string_view to_string(BoundaryTag t);
Region parse_region(std::string_view s);
BoundaryTag parse_boundary_tag(std::string_view s);

/// Triangle with 3 (linear) or 6 (quadratic) nodes. Quadratic ordering:
/// corners 0,1,2 counter-clockwise, then mid-edges (0-1), (1-2), (2-0).
struct Element {
  std::array<int, 6> nodes{-1, -1, -1, -1, -1, -1};
  Region region = Region::vacuum;
};

/// Tagged edge (2 or 3 nodes; the third is the mid-edge node for quadratic meshes).
/// Interface edges between solid and vacuum carry `free_surface`.
struct BoundaryEdge {
  std::array<int, 3> nodes{-1, -1, -1};
  BoundaryTag tag = BoundaryTag::free_surface;
};

class Mesh2D {
 public:
  Mesh2D() = default;
  explicit Mesh2D(int order) : order_(order) {}

  int order() const noexcept { return order_; }
  int nodes_per_element() const noexcept { return order_ == 2 ? 6 : 3; }
  int nodes_per_edge() const noexcept { return order_ == 2 ? 3 : 2; }

  std::vector<Eigen::Vector2d> nodes;
  std::vector<Element> elements;
  std::vector<BoundaryEdge> boundary;
  /// Node pairs (follower, leader) identified by periodicity.
  std::vector<std::pair<int, int>> periodic;
  /// Period of the x-direction identification, 0 when not periodic.
  double period_x = 0.0;

  /// Throws InputError for inverted elements, dangling indices, or electrode
  /// tags not adjacent to metal/waveguide elements.
  void validate() const;

  /// Canonical node per periodic equivalence class.
  std::vector<int> representatives() const;

  /// Corner coordinates of element `e`, unwrapped across the periodic seam.
  std::array<Eigen::Vector2d, 6> element_coordinates(int e) const;

  double element_area(int e) const;
  bool has_region(Region r) const;

 private:
  int order_ = 2;
};

/// Plain-text mesh format, see README ("Mesh file format").
void write_mesh(std::ostream& os, const Mesh2D& mesh);
Mesh2D read_mesh(std::istream& is);

// ---------------------------------------------------------------------------
// Structured triangulation of rectilinear grids

struct EdgeInfo {
  Eigen::Vector2d a;
  Eigen::Vector2d b;
  Region inside;
  std::optional<Region> outside;  // empty on the outer boundary
};

struct GridSpec {
  std::vector<double> x;  // ascending grid lines
  std::vector<double> y;
  int order = 2;
  /// Diagonals mirrored about x = mirror_x, so the triangulation is symmetric.
  double mirror_x = 0.0;
  /// Identify the nodes on x = x.front() with x = x.back().
  bool periodic_x = false;
};

using RegionFn = std::function<std::optional<Region>(double xc, double yc)>;
using TagFn = std::function<std::optional<BoundaryTag>(const EdgeInfo&)>;

Mesh2D build_structured(const GridSpec& spec, const RegionFn& region, const TagFn& tag);

/// `n` cells between a and b with geometric grading; ratio > 1 makes cells
/// grow away from `a`.
std::vector<double> graded(double a, double b, int n, double ratio);
/// Joins consecutive segments of grid lines, dropping duplicate end points.
std::vector<double> join(std::initializer_list<std::vector<double>> parts);

// ---------------------------------------------------------------------------

/// Finds the element containing a point (bin search on element bounding boxes).
class PointLocator {
 public:
  explicit PointLocator(const Mesh2D& mesh, int bins_per_axis = 64);
  /// Element index and barycentric coordinates (corner based), or nullopt.
  std::optional<std::pair<int, Eigen::Vector3d>> locate(const Eigen::Vector2d& p) const;

 private:
  const Mesh2D* mesh_;
  Eigen::Vector2d lo_, hi_;
  int nb_;
  std::vector<std::vector<int>> bins_;
};

}  // namespace qad::fem
