#include "qad/mesh.hpp"

#include "qad/errors.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

namespace qad::fem {

std::string_view to_string(Region r) {
  switch (r) {
    case Region::waveguide: return "waveguide";
    case Region::substrate: return "substrate";
    case Region::metal: return "metal";
    case Region::vacuum: return "vacuum";
  }
  return "?";
}

std::string_view to_string(BoundaryTag t) {
  switch (t) {
    case BoundaryTag::free_surface: return "free-surface";
    case BoundaryTag::fixed: return "fixed";
    case BoundaryTag::electrode_pos: return "electrode+";
    case BoundaryTag::electrode_neg: return "electrode-";
  }
  return "?";
}

Region parse_region(std::string_view s) {
  for (Region r : {Region::waveguide, Region::substrate, Region::metal, Region::vacuum})
    if (to_string(r) == s) return r;
  throw InputError("unknown region tag '" + std::string(s) + "'");
}

BoundaryTag parse_boundary_tag(std::string_view s) {
  for (BoundaryTag t : {BoundaryTag::free_surface, BoundaryTag::fixed, BoundaryTag::electrode_pos,
                        BoundaryTag::electrode_neg})
    if (to_string(t) == s) return t;
  throw InputError("unknown boundary tag '" + std::string(s) + "'");
}

namespace {

double signed_area(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
  return 0.5 * ((b - a).x() * (c - a).y() - (c - a).x() * (b - a).y());
}

}  // namespace

void Mesh2D::validate() const {
  if (order_ != 1 && order_ != 2) throw InputError("mesh order must be 1 or 2");
  const int n = static_cast<int>(nodes.size());
  const int npe = nodes_per_element();
  std::vector<std::vector<Region>> node_regions(nodes.size());
  for (std::size_t e = 0; e < elements.size(); ++e) {
    const auto& el = elements[e];
    for (int k = 0; k < npe; ++k) {
      if (el.nodes[k] < 0 || el.nodes[k] >= n)
        throw InputError("element " + std::to_string(e) + " references a missing node");
      node_regions[el.nodes[k]].push_back(el.region);
    }
    if (!(element_area(static_cast<int>(e)) > 0.0))
      throw InputError("element " + std::to_string(e) + " is inverted or degenerate");
  }
  for (std::size_t b = 0; b < boundary.size(); ++b) {
    const auto& edge = boundary[b];
    for (int k = 0; k < nodes_per_edge(); ++k)
      if (edge.nodes[k] < 0 || edge.nodes[k] >= n)
        throw InputError("boundary edge " + std::to_string(b) + " references a missing node");
    if (edge.tag == BoundaryTag::electrode_pos || edge.tag == BoundaryTag::electrode_neg) {
      const auto& regs = node_regions[edge.nodes[0]];
      const bool ok = std::any_of(regs.begin(), regs.end(),
                                  [](Region r) { return r == Region::metal || r == Region::waveguide; });
      if (!ok) throw InputError("electrode edge " + std::to_string(b) + " is not adjacent to metal or waveguide");
    }
  }
  for (auto [f, l] : periodic)
    if (f < 0 || f >= n || l < 0 || l >= n) throw InputError("periodic pair references a missing node");
}

std::vector<int> Mesh2D::representatives() const {
  std::vector<int> rep(nodes.size());
  std::iota(rep.begin(), rep.end(), 0);
  auto find = [&](int i) {
    while (rep[i] != i) i = rep[i] = rep[rep[i]];
    return i;
  };
  for (auto [f, l] : periodic) {
    const int a = find(f), b = find(l);
    if (a != b) rep[std::max(a, b)] = std::min(a, b);
  }
  for (std::size_t i = 0; i < rep.size(); ++i) rep[i] = find(static_cast<int>(i));
  return rep;
}

std::array<Eigen::Vector2d, 6> Mesh2D::element_coordinates(int e) const {
  std::array<Eigen::Vector2d, 6> xy;
  const auto& el = elements[e];
  for (int k = 0; k < nodes_per_element(); ++k) xy[k] = nodes[el.nodes[k]];
  return xy;
}

double Mesh2D::element_area(int e) const {
  const auto& el = elements[e];
  return signed_area(nodes[el.nodes[0]], nodes[el.nodes[1]], nodes[el.nodes[2]]);
}

bool Mesh2D::has_region(Region r) const {
  return std::any_of(elements.begin(), elements.end(), [r](const Element& e) { return e.region == r; });
}

// ---------------------------------------------------------------------------

void write_mesh(std::ostream& os, const Mesh2D& mesh) {
  os.precision(17);
  os << "qadsim-mesh 1\n";
  os << "order " << mesh.order() << "\n";
  os << "period_x " << mesh.period_x << "\n";
  os << "nodes " << mesh.nodes.size() << "\n";
  for (const auto& p : mesh.nodes) os << p.x() << ' ' << p.y() << '\n';
  os << "elements " << mesh.elements.size() << "\n";
  for (const auto& e : mesh.elements) {
    os << to_string(e.region);
    for (int k = 0; k < mesh.nodes_per_element(); ++k) os << ' ' << e.nodes[k];
    os << '\n';
  }
  os << "boundary " << mesh.boundary.size() << "\n";
  for (const auto& b : mesh.boundary) {
    os << to_string(b.tag);
    for (int k = 0; k < mesh.nodes_per_edge(); ++k) os << ' ' << b.nodes[k];
    os << '\n';
  }
  os << "periodic " << mesh.periodic.size() << "\n";
  for (auto [f, l] : mesh.periodic) os << f << ' ' << l << '\n';
}

namespace {

class LineReader {
 public:
  explicit LineReader(std::istream& is) : is_(is) {}

  std::istringstream next() {
    std::string line;
    while (std::getline(is_, line)) {
      ++line_no_;
      const auto pos = line.find('#');
      if (pos != std::string::npos) line.erase(pos);
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      return std::istringstream(line);
    }
    fail("unexpected end of file");
  }

  std::size_t header(const std::string& keyword) {
    auto ss = next();
    std::string k;
    long long count = -1;
    ss >> k >> count;
    if (k != keyword || count < 0) fail("expected '" + keyword + " <count>'");
    return static_cast<std::size_t>(count);
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw InputError("mesh file line " + std::to_string(line_no_) + ": " + msg);
  }

 private:
  std::istream& is_;
  int line_no_ = 0;
};

}  // namespace

Mesh2D read_mesh(std::istream& is) {
  LineReader in(is);
  {
    auto ss = in.next();
    std::string magic;
    int version = 0;
    ss >> magic >> version;
    if (magic != "qadsim-mesh" || version != 1) in.fail("not a qadsim-mesh v1 file");
  }
  const auto order = static_cast<int>(in.header("order"));
  if (order != 1 && order != 2) in.fail("order must be 1 or 2");
  Mesh2D mesh(order);
  {
    auto ss = in.next();
    std::string k;
    ss >> k >> mesh.period_x;
    if (k != "period_x" || ss.fail()) in.fail("expected 'period_x <value>'");
  }
  const std::size_t nn = in.header("nodes");
  mesh.nodes.resize(nn);
  for (auto& p : mesh.nodes) {
    auto ss = in.next();
    ss >> p.x() >> p.y();
    if (ss.fail()) in.fail("bad node record");
  }
  const std::size_t ne = in.header("elements");
  mesh.elements.resize(ne);
  for (auto& e : mesh.elements) {
    auto ss = in.next();
    std::string tag;
    ss >> tag;
    e.region = parse_region(tag);
    for (int k = 0; k < mesh.nodes_per_element(); ++k) ss >> e.nodes[k];
    if (ss.fail()) in.fail("bad element record");
  }
  const std::size_t nb = in.header("boundary");
  mesh.boundary.resize(nb);
  for (auto& b : mesh.boundary) {
    auto ss = in.next();
    std::string tag;
    ss >> tag;
    b.tag = parse_boundary_tag(tag);
    for (int k = 0; k < mesh.nodes_per_edge(); ++k) ss >> b.nodes[k];
    if (ss.fail()) in.fail("bad boundary record");
  }
  const std::size_t np = in.header("periodic");
  mesh.periodic.resize(np);
  for (auto& [f, l] : mesh.periodic) {
    auto ss = in.next();
    ss >> f >> l;
    if (ss.fail()) in.fail("bad periodic record");
  }
  mesh.validate();
  return mesh;
}

// ---------------------------------------------------------------------------

std::vector<double> graded(double a, double b, int n, double ratio) {
  if (n < 1) throw InputError("graded: need at least one cell");
  std::vector<double> x(n + 1);
  double total = 0.0, w = 1.0;
  for (int i = 0; i < n; ++i, w *= ratio) total += w;
  x[0] = a;
  w = 1.0;
  double acc = 0.0;
  for (int i = 0; i < n; ++i, w *= ratio) {
    acc += w;
    x[i + 1] = a + (b - a) * acc / total;
  }
  x[n] = b;
  return x;
}

std::vector<double> join(std::initializer_list<std::vector<double>> parts) {
  // Segments may run in either direction; shared end points are merged.
  std::vector<double> all;
  for (const auto& p : parts) all.insert(all.end(), p.begin(), p.end());
  std::sort(all.begin(), all.end());
  if (all.empty()) return all;
  const double tol = 1e-12 * std::max(all.back() - all.front(), 1e-300);
  std::vector<double> out{all.front()};
  for (double v : all)
    if (v - out.back() > tol) out.push_back(v);
  return out;
}

Mesh2D build_structured(const GridSpec& spec, const RegionFn& region_of, const TagFn& tag_of) {
  const int nx = static_cast<int>(spec.x.size()) - 1;
  const int ny = static_cast<int>(spec.y.size()) - 1;
  if (nx < 1 || ny < 1) throw InputError("structured grid needs at least one cell per axis");
  const int s = spec.order == 2 ? 2 : 1;
  const int gx = s * nx + 1, gy = s * ny + 1;

  auto coord = [&](const std::vector<double>& lines, int gi) {
    if (s == 1) return lines[gi];
    return gi % 2 == 0 ? lines[gi / 2] : 0.5 * (lines[gi / 2] + lines[gi / 2 + 1]);
  };

  // Cell regions.
  std::vector<std::optional<Region>> cells(static_cast<std::size_t>(nx) * ny);
  auto cell = [&](int i, int j) -> std::optional<Region> {
    if (i < 0 || j < 0 || i >= nx || j >= ny) return std::nullopt;
    return cells[static_cast<std::size_t>(j) * nx + i];
  };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      cells[static_cast<std::size_t>(j) * nx + i] =
          region_of(0.5 * (spec.x[i] + spec.x[i + 1]), 0.5 * (spec.y[j] + spec.y[j + 1]));

  std::vector<int> id(static_cast<std::size_t>(gx) * gy, -1);
  Mesh2D mesh(spec.order);
  auto node = [&](int gi, int gj) {
    int& slot = id[static_cast<std::size_t>(gj) * gx + gi];
    if (slot < 0) {
      slot = static_cast<int>(mesh.nodes.size());
      mesh.nodes.emplace_back(coord(spec.x, gi), coord(spec.y, gj));
    }
    return slot;
  };
  auto tri = [&](std::array<int, 2> p0, std::array<int, 2> p1, std::array<int, 2> p2, Region r) {
    Element el;
    el.region = r;
    el.nodes[0] = node(p0[0], p0[1]);
    el.nodes[1] = node(p1[0], p1[1]);
    el.nodes[2] = node(p2[0], p2[1]);
    if (s == 2) {
      auto mid = [&](std::array<int, 2> a, std::array<int, 2> b) { return node((a[0] + b[0]) / 2, (a[1] + b[1]) / 2); };
      el.nodes[3] = mid(p0, p1);
      el.nodes[4] = mid(p1, p2);
      el.nodes[5] = mid(p2, p0);
    }
    mesh.elements.push_back(el);
  };

  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const auto r = cell(i, j);
      if (!r) continue;
      const std::array<int, 2> p00{s * i, s * j}, p10{s * (i + 1), s * j};
      const std::array<int, 2> p11{s * (i + 1), s * (j + 1)}, p01{s * i, s * (j + 1)};
      const double xc = 0.5 * (spec.x[i] + spec.x[i + 1]);
      if (xc < spec.mirror_x) {
        tri(p00, p10, p11, *r);
        tri(p00, p11, p01, *r);
      } else {
        tri(p00, p10, p01, *r);
        tri(p10, p11, p01, *r);
      }
    }
  }

  // Tagged edges: cell sides whose two neighbours differ (or outer boundary).
  auto add_edge = [&](std::array<int, 2> a, std::array<int, 2> b, Region inside, std::optional<Region> outside) {
    EdgeInfo info{Eigen::Vector2d(coord(spec.x, a[0]), coord(spec.y, a[1])),
                  Eigen::Vector2d(coord(spec.x, b[0]), coord(spec.y, b[1])), inside, outside};
    const auto t = tag_of(info);
    if (!t) return;
    BoundaryEdge edge;
    edge.tag = *t;
    edge.nodes[0] = node(a[0], a[1]);
    edge.nodes[1] = node(b[0], b[1]);
    if (s == 2) edge.nodes[2] = node((a[0] + b[0]) / 2, (a[1] + b[1]) / 2);
    mesh.boundary.push_back(edge);
  };
  auto consider = [&](std::optional<Region> a, std::optional<Region> b, std::array<int, 2> p, std::array<int, 2> q,
                      bool seam) {
    if (seam && spec.periodic_x) return;
    if (a && (!b || *a != *b)) add_edge(p, q, *a, b);
    else if (!a && b) add_edge(p, q, *b, a);
  };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i <= nx; ++i) {  // vertical sides
      const std::array<int, 2> p{s * i, s * j}, q{s * i, s * (j + 1)};
      const bool seam = i == 0 || i == nx;
      const auto left = cell(i - 1, j), right = cell(i, j);
      // Emit each differing side once, owned by the non-empty/"left" side.
      if (left && right && *left != *right) {
        add_edge(p, q, *left, right);
      } else {
        consider(left, right, p, q, seam);
      }
    }
  }
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i < nx; ++i) {  // horizontal sides
      const std::array<int, 2> p{s * i, s * j}, q{s * (i + 1), s * j};
      const auto below = cell(i, j - 1), above = cell(i, j);
      if (below && above && *below != *above) {
        add_edge(p, q, *below, above);
      } else {
        consider(below, above, p, q, false);
      }
    }
  }

  if (spec.periodic_x) {
    mesh.period_x = spec.x.back() - spec.x.front();
    for (int gj = 0; gj < gy; ++gj) {
      const int a = id[static_cast<std::size_t>(gj) * gx + (gx - 1)];
      const int b = id[static_cast<std::size_t>(gj) * gx + 0];
      if (a >= 0 && b >= 0) mesh.periodic.emplace_back(a, b);
    }
  }
  mesh.validate();
  return mesh;
}

// ---------------------------------------------------------------------------

PointLocator::PointLocator(const Mesh2D& mesh, int bins_per_axis) : mesh_(&mesh), nb_(bins_per_axis) {
  lo_ = Eigen::Vector2d::Constant(std::numeric_limits<double>::infinity());
  hi_ = -lo_;
  for (const auto& p : mesh.nodes) {
    lo_ = lo_.cwiseMin(p);
    hi_ = hi_.cwiseMax(p);
  }
  bins_.assign(static_cast<std::size_t>(nb_) * nb_, {});
  const Eigen::Vector2d span = (hi_ - lo_).cwiseMax(1e-300);
  auto bin = [&](double v, int axis) {
    int b = static_cast<int>((v - lo_(axis)) / span(axis) * nb_);
    return std::clamp(b, 0, nb_ - 1);
  };
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    Eigen::Vector2d a = mesh.nodes[mesh.elements[e].nodes[0]], b = a;
    for (int k = 1; k < 3; ++k) {
      a = a.cwiseMin(mesh.nodes[mesh.elements[e].nodes[k]]);
      b = b.cwiseMax(mesh.nodes[mesh.elements[e].nodes[k]]);
    }
    for (int j = bin(a.y(), 1); j <= bin(b.y(), 1); ++j)
      for (int i = bin(a.x(), 0); i <= bin(b.x(), 0); ++i)
        bins_[static_cast<std::size_t>(j) * nb_ + i].push_back(static_cast<int>(e));
  }
}

std::optional<std::pair<int, Eigen::Vector3d>> PointLocator::locate(const Eigen::Vector2d& p) const {
  const Eigen::Vector2d span = (hi_ - lo_).cwiseMax(1e-300);
  const int i = std::clamp(static_cast<int>((p.x() - lo_.x()) / span.x() * nb_), 0, nb_ - 1);
  const int j = std::clamp(static_cast<int>((p.y() - lo_.y()) / span.y() * nb_), 0, nb_ - 1);
  constexpr double tol = 1e-10;
  for (int e : bins_[static_cast<std::size_t>(j) * nb_ + i]) {
    const auto& el = mesh_->elements[e];
    const Eigen::Vector2d& a = mesh_->nodes[el.nodes[0]];
    const Eigen::Vector2d& b = mesh_->nodes[el.nodes[1]];
    const Eigen::Vector2d& c = mesh_->nodes[el.nodes[2]];
    const double area = signed_area(a, b, c);
    const Eigen::Vector3d l(signed_area(p, b, c) / area, signed_area(a, p, c) / area, signed_area(a, b, p) / area);
    if (l.minCoeff() >= -tol) return std::make_pair(e, l);
  }
  return std::nullopt;
}

}  // namespace qad::fem
