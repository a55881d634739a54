#pragma once

// Lagrange triangles (P1/P2) on straight-sided elements.

#include <Eigen/Core>

#include <array>

namespace qad::fem::detail {

struct QuadPoint {
  Eigen::Vector3d l;  // barycentric coordinates
  double w;           // weight, sums to 1 over the rule
};

/// Degree-4 Dunavant rule (6 points).
inline const std::array<QuadPoint, 6>& triangle_rule() {
  static const std::array<QuadPoint, 6> rule = [] {
    const double a1 = 0.445948490915965, b1 = 0.108103018168070, w1 = 0.223381589678011;
    const double a2 = 0.091576213509771, b2 = 0.816847572980459, w2 = 0.109951743655322;
    return std::array<QuadPoint, 6>{{{Eigen::Vector3d(b1, a1, a1), w1},
                                     {Eigen::Vector3d(a1, b1, a1), w1},
                                     {Eigen::Vector3d(a1, a1, b1), w1},
                                     {Eigen::Vector3d(b2, a2, a2), w2},
                                     {Eigen::Vector3d(a2, b2, a2), w2},
                                     {Eigen::Vector3d(a2, a2, b2), w2}}};
  }();
  return rule;
}

/// Shape values and physical gradients at one point of an element.
struct ShapeEval {
  int n = 0;
  std::array<double, 6> N{};
  std::array<double, 6> dx{};
  std::array<double, 6> dy{};
};

struct TriangleGeometry {
  double area = 0.0;
  std::array<Eigen::Vector2d, 3> grad_l;  // gradients of barycentric coordinates
};

inline TriangleGeometry triangle_geometry(const Eigen::Vector2d& p0, const Eigen::Vector2d& p1,
                                          const Eigen::Vector2d& p2) {
  TriangleGeometry g;
  const double twice = (p1 - p0).x() * (p2 - p0).y() - (p2 - p0).x() * (p1 - p0).y();
  g.area = 0.5 * twice;
  g.grad_l[0] = Eigen::Vector2d(p1.y() - p2.y(), p2.x() - p1.x()) / twice;
  g.grad_l[1] = Eigen::Vector2d(p2.y() - p0.y(), p0.x() - p2.x()) / twice;
  g.grad_l[2] = Eigen::Vector2d(p0.y() - p1.y(), p1.x() - p0.x()) / twice;
  return g;
}

inline ShapeEval evaluate_shape(int order, const TriangleGeometry& g, const Eigen::Vector3d& l) {
  ShapeEval s;
  const auto& G = g.grad_l;
  if (order == 1) {
    s.n = 3;
    for (int i = 0; i < 3; ++i) {
      s.N[i] = l(i);
      s.dx[i] = G[i].x();
      s.dy[i] = G[i].y();
    }
    return s;
  }
  s.n = 6;
  for (int i = 0; i < 3; ++i) {
    s.N[i] = l(i) * (2.0 * l(i) - 1.0);
    const double f = 4.0 * l(i) - 1.0;
    s.dx[i] = f * G[i].x();
    s.dy[i] = f * G[i].y();
  }
  constexpr int pa[3] = {0, 1, 2};
  constexpr int pb[3] = {1, 2, 0};
  for (int k = 0; k < 3; ++k) {
    const int a = pa[k], b = pb[k];
    s.N[3 + k] = 4.0 * l(a) * l(b);
    s.dx[3 + k] = 4.0 * (l(a) * G[b].x() + l(b) * G[a].x());
    s.dy[3 + k] = 4.0 * (l(a) * G[b].y() + l(b) * G[a].y());
  }
  return s;
}

}  // namespace qad::fem::detail
