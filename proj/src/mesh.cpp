#include "homs/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "homs/hash.hpp"

namespace homs {

bool CellGeometry::centered() const {
  if (!inclusion) return true;
  return std::abs(inclusion->center.x() - 0.5) < 1e-14 && std::abs(inclusion->center.y() - 0.5) < 1e-14;
}

std::string tag_name(unsigned t) {
  switch (t) {
    case kGammaT: return "Gamma_T";
    case kGammaQ: return "Gamma_q";
    case kGammaC: return "Gamma_c";
    case kGammaD: return "Gamma_d";
    case kGammaU: return "Gamma_u";
    case kGammaSigma: return "Gamma_sigma";
    default: return "?";
  }
}

unsigned tag_from_name(const std::string& name) {
  for (unsigned t : {kGammaT, kGammaQ, kGammaC, kGammaD, kGammaU, kGammaSigma}) {
    if (tag_name(t) == name) return t;
  }
  // short aliases
  if (name == "T") return kGammaT;
  if (name == "q") return kGammaQ;
  if (name == "c") return kGammaC;
  if (name == "d") return kGammaD;
  if (name == "u") return kGammaU;
  if (name == "sigma") return kGammaSigma;
  throw MeshError("unknown boundary tag '" + name + "'");
}

double Mesh::area(int e) const {
  const auto& el = elements[e];
  const Eigen::Vector2d a = nodes[el[1]] - nodes[el[0]];
  const Eigen::Vector2d b = nodes[el[2]] - nodes[el[0]];
  return 0.5 * (a.x() * b.y() - a.y() * b.x());
}

Eigen::Vector2d Mesh::centroid(int e) const {
  const auto& el = elements[e];
  return (nodes[el[0]] + nodes[el[1]] + nodes[el[2]]) / 3.0;
}

Eigen::Matrix<double, 2, 3> Mesh::shape_gradients(int e) const {
  const auto& el = elements[e];
  const Eigen::Vector2d& p0 = nodes[el[0]];
  const Eigen::Vector2d& p1 = nodes[el[1]];
  const Eigen::Vector2d& p2 = nodes[el[2]];
  const double det = (p1.x() - p0.x()) * (p2.y() - p0.y()) - (p2.x() - p0.x()) * (p1.y() - p0.y());
  Eigen::Matrix<double, 2, 3> g;
  g(0, 0) = p1.y() - p2.y();
  g(0, 1) = p2.y() - p0.y();
  g(0, 2) = p0.y() - p1.y();
  g(1, 0) = p2.x() - p1.x();
  g(1, 1) = p0.x() - p2.x();
  g(1, 2) = p1.x() - p0.x();
  return g / det;
}

namespace {

Eigen::Vector3d barycentric(const Mesh& m, int e, const Eigen::Vector2d& x) {
  const auto& el = m.elements[e];
  const Eigen::Vector2d& p0 = m.nodes[el[0]];
  const Eigen::Vector2d& p1 = m.nodes[el[1]];
  const Eigen::Vector2d& p2 = m.nodes[el[2]];
  const double det = (p1.x() - p0.x()) * (p2.y() - p0.y()) - (p2.x() - p0.x()) * (p1.y() - p0.y());
  const double l1 = ((x.x() - p0.x()) * (p2.y() - p0.y()) - (p2.x() - p0.x()) * (x.y() - p0.y())) / det;
  const double l2 = ((p1.x() - p0.x()) * (x.y() - p0.y()) - (x.x() - p0.x()) * (p1.y() - p0.y())) / det;
  return {1.0 - l1 - l2, l1, l2};
}

}  // namespace

int Mesh::locate(const Eigen::Vector2d& x, Eigen::Vector3d& bary) const {
  const Eigen::Vector2d hi = grid.origin + grid.spacing.cwiseProduct(
                                               Eigen::Vector2d(grid.cells[0], grid.cells[1]));
  const Eigen::Vector2d p = x.cwiseMax(grid.origin).cwiseMin(hi);
  int idx[2];
  for (int d = 0; d < 2; ++d) {
    idx[d] = static_cast<int>(std::floor((p[d] - grid.origin[d]) / grid.spacing[d]));
    idx[d] = std::clamp(idx[d], 0, grid.cells[d] - 1);
  }
  const int base = 2 * (idx[1] * grid.cells[0] + idx[0]);
  const Eigen::Vector3d b0 = barycentric(*this, base, p);
  const Eigen::Vector3d b1 = barycentric(*this, base + 1, p);
  if (b0.minCoeff() >= b1.minCoeff()) {
    bary = b0;
    return base;
  }
  bary = b1;
  return base + 1;
}

std::uint64_t Mesh::hash() const {
  Fnv1a h;
  for (const auto& p : nodes) {
    h.pod(p.x());
    h.pod(p.y());
  }
  for (const auto& el : elements) h.pod(el);
  for (Phase ph : phases) h.pod(ph);
  for (const auto& be : boundary_edges) h.pod(be.tags);
  return h.value();
}

bool diagonal_is_rising(int i, int j, int period) {
  const int li = i % period;
  const int lj = j % period;
  const bool left = 2 * li < period;
  const bool low = 2 * lj < period;
  return left == low;
}

namespace {

// Structured triangulation of a box with nx × ny squares. Elements of square
// (i, j) are stored at 2(j nx + i) and 2(j nx + i) + 1, which locate() uses.
Mesh structured(const Box& box, int nx, int ny, int period) {
  if (nx < 1 || ny < 1) throw MeshError("mesh divisions must be at least 1");
  if (!(box.hi.x() > box.lo.x()) || !(box.hi.y() > box.lo.y())) throw MeshError("degenerate box");
  Mesh m;
  m.grid.origin = box.lo;
  m.grid.spacing = {(box.hi.x() - box.lo.x()) / nx, (box.hi.y() - box.lo.y()) / ny};
  m.grid.cells = {nx, ny};
  m.grid.pattern_period = period;
  m.nodes.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      // exact end points so boundary detection is robust
      const double x = (i == nx) ? box.hi.x() : box.lo.x() + i * m.grid.spacing.x();
      const double y = (j == ny) ? box.hi.y() : box.lo.y() + j * m.grid.spacing.y();
      m.nodes.emplace_back(x, y);
    }
  }
  auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  m.elements.reserve(2 * static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int p00 = id(i, j), p10 = id(i + 1, j), p01 = id(i, j + 1), p11 = id(i + 1, j + 1);
      if (diagonal_is_rising(i, j, period)) {
        m.elements.push_back({p00, p10, p11});
        m.elements.push_back({p00, p11, p01});
      } else {
        m.elements.push_back({p00, p10, p01});
        m.elements.push_back({p10, p11, p01});
      }
    }
  }
  m.phases.assign(m.elements.size(), Phase::Matrix);
  m.node_elements.assign(m.nodes.size(), {});
  for (int e = 0; e < m.num_elements(); ++e)
    for (int v : m.elements[e]) m.node_elements[v].push_back(e);

  // boundary edges: bottom, right, top, left, walking the squares on each face
  auto element_with_edge = [&](int a, int b) {
    for (int e : m.node_elements[a]) {
      const auto& el = m.elements[e];
      if (std::find(el.begin(), el.end(), b) != el.end()) return e;
    }
    throw MeshError("internal: boundary edge without element");
  };
  auto add_edge = [&](int a, int b, Face f) { m.boundary_edges.push_back({a, b, element_with_edge(a, b), f, 0u}); };
  for (int i = 0; i < nx; ++i) add_edge(id(i, 0), id(i + 1, 0), Face::Bottom);
  for (int j = 0; j < ny; ++j) add_edge(id(nx, j), id(nx, j + 1), Face::Right);
  for (int i = nx; i > 0; --i) add_edge(id(i, ny), id(i - 1, ny), Face::Top);
  for (int j = ny; j > 0; --j) add_edge(id(0, j), id(0, j - 1), Face::Left);
  return m;
}

void apply_tagging(Mesh& m, const BoundaryTagging& tagging) {
  static const char* face_names[] = {"left", "right", "bottom", "top"};
  for (int f = 0; f < 4; ++f) {
    const unsigned t = tagging.face[f];
    const bool thermal = ((t & kGammaT) != 0) != ((t & kGammaQ) != 0);
    const bool moisture = ((t & kGammaC) != 0) != ((t & kGammaD) != 0);
    const bool mech = ((t & kGammaU) != 0) != ((t & kGammaSigma) != 0);
    if (!thermal || !moisture || !mech)
      throw MeshError(std::string("face ") + face_names[f] +
                      " needs exactly one thermal, one moisture and one mechanical tag");
  }
  for (auto& be : m.boundary_edges) be.tags = tagging.face[static_cast<int>(be.face)];
}

}  // namespace

UnitCellMesh build_unit_cell_mesh(int n_div, const std::optional<Circle>& inclusion) {
  if (n_div < 1) throw MeshError("n_div must be positive, got " + std::to_string(n_div));
  if (inclusion) {
    const Circle& c = *inclusion;
    if (!(c.radius > 0.0) || c.center.x() - c.radius < 0.0 || c.center.x() + c.radius > 1.0 ||
        c.center.y() - c.radius < 0.0 || c.center.y() + c.radius > 1.0 ||
        (c.center.x() == 0.5 && c.center.y() == 0.5 && c.radius >= 0.5))
      throw MeshError("inclusion circle is not contained in the unit cell");
  }
  UnitCellMesh cell;
  static_cast<Mesh&>(cell) = structured(Box{}, n_div, n_div, n_div);
  cell.geometry.inclusion = inclusion;
  for (int e = 0; e < cell.num_elements(); ++e) cell.phases[e] = cell.geometry.phase_at(cell.centroid(e));
  for (int v = 0; v < cell.num_nodes(); ++v) {
    const auto& p = cell.nodes[v];
    if (p.x() == 0.0 || p.x() == 1.0 || p.y() == 0.0 || p.y() == 1.0) cell.boundary_nodes.push_back(v);
  }
  cell.symmetric = cell.geometry.centered() && n_div % 2 == 0;
  BoundaryTagging all;
  apply_tagging(cell, all);
  return cell;
}

Mesh build_macro_mesh(const Box& domain, std::array<int, 2> n_div, const BoundaryTagging& tagging) {
  Mesh m = structured(domain, n_div[0], n_div[1], std::max(n_div[0], n_div[1]));
  apply_tagging(m, tagging);
  return m;
}

std::array<int, 2> cells_per_axis(const Box& domain, double epsilon) {
  if (!(epsilon > 0.0)) throw MeshError("epsilon must be positive");
  std::array<int, 2> n{};
  for (int d = 0; d < 2; ++d) {
    const double len = (domain.hi[d] - domain.lo[d]) / epsilon;
    const double start = domain.lo[d] / epsilon;
    if (std::abs(len - std::round(len)) > 1e-9 * std::max(1.0, len) || std::round(len) < 1.0)
      throw MeshError("domain is not an integer number of cells of size " + std::to_string(epsilon) +
                      " along axis " + std::to_string(d + 1));
    if (std::abs(start - std::round(start)) > 1e-9 * std::max(1.0, std::abs(start)))
      throw MeshError("domain corner is not on the cell lattice along axis " + std::to_string(d + 1));
    n[d] = static_cast<int>(std::lround(len));
  }
  return n;
}

Eigen::Vector2d micro_coordinate(const Eigen::Vector2d& x, double epsilon) {
  Eigen::Vector2d y;
  for (int d = 0; d < 2; ++d) {
    double s = x[d] / epsilon;
    const double r = std::round(s);
    if (std::abs(s - r) < 1e-9) s = r;
    y[d] = s - std::floor(s);
  }
  return y;
}

Mesh build_fine_mesh(const Box& domain, double epsilon, int per_cell_div, const CellGeometry& geometry,
                     const BoundaryTagging& tagging) {
  if (per_cell_div < 4) throw MeshError("per_cell_div must be at least 4");
  const auto n = cells_per_axis(domain, epsilon);
  Mesh m = structured(domain, n[0] * per_cell_div, n[1] * per_cell_div, per_cell_div);
  for (int e = 0; e < m.num_elements(); ++e) m.phases[e] = geometry.phase_at(micro_coordinate(m.centroid(e), epsilon));
  apply_tagging(m, tagging);
  return m;
}

}  // namespace homs
