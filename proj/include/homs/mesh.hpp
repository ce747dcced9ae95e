#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace homs {

class MeshError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

enum class Phase : std::uint8_t { Matrix = 0, Inclusion = 1 };

struct Circle {
  Eigen::Vector2d center{0.5, 0.5};
  double radius = 0.25;
  bool contains(const Eigen::Vector2d& y) const { return (y - center).squaredNorm() < radius * radius; }
};

/// Micro geometry of the unit cell: matrix everywhere except an optional
/// circular inclusion.
struct CellGeometry {
  std::optional<Circle> inclusion;
  Phase phase_at(const Eigen::Vector2d& y) const {
    return (inclusion && inclusion->contains(y)) ? Phase::Inclusion : Phase::Matrix;
  }
  bool centered() const;
};

// Boundary tags. Each boundary edge carries exactly one tag per field, so
// the stored value is a bitmask with one bit from each of the three pairs.
enum BoundaryTag : unsigned {
  kGammaT = 1u << 0,      // prescribed temperature
  kGammaQ = 1u << 1,      // prescribed heat flux
  kGammaC = 1u << 2,      // prescribed moisture
  kGammaD = 1u << 3,      // prescribed moisture flux
  kGammaU = 1u << 4,      // prescribed displacement
  kGammaSigma = 1u << 5,  // prescribed traction
};
constexpr unsigned kAllDirichlet = kGammaT | kGammaC | kGammaU;

std::string tag_name(unsigned single_tag);
unsigned tag_from_name(const std::string& name);

enum class Face { Left = 0, Right = 1, Bottom = 2, Top = 3 };

struct Box {
  Eigen::Vector2d lo{0.0, 0.0};
  Eigen::Vector2d hi{1.0, 1.0};
  double measure() const { return (hi - lo).prod(); }
};

/// Per-face tag masks, indexed by Face.
struct BoundaryTagging {
  std::array<unsigned, 4> face{kAllDirichlet, kAllDirichlet, kAllDirichlet, kAllDirichlet};
};

struct BoundaryEdge {
  int a = 0;
  int b = 0;
  int element = 0;
  Face face = Face::Left;
  unsigned tags = 0;
};

/// Structured-grid description kept with every mesh for O(1) point location.
struct GridInfo {
  Eigen::Vector2d origin{0.0, 0.0};
  Eigen::Vector2d spacing{1.0, 1.0};
  std::array<int, 2> cells{1, 1};
  int pattern_period = 1;
};

struct Mesh {
  std::vector<Eigen::Vector2d> nodes;
  std::vector<std::array<int, 3>> elements;  // counter-clockwise
  std::vector<Phase> phases;                 // one per element
  std::vector<BoundaryEdge> boundary_edges;
  std::vector<std::vector<int>> node_elements;
  GridInfo grid;

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_elements() const { return static_cast<int>(elements.size()); }
  double area(int e) const;
  Eigen::Vector2d centroid(int e) const;
  /// Constant gradients of the three P1 shape functions (columns).
  Eigen::Matrix<double, 2, 3> shape_gradients(int e) const;

  /// Element containing x (clamped into the grid box) and the barycentric
  /// coordinates of x in it.
  int locate(const Eigen::Vector2d& x, Eigen::Vector3d& bary) const;

  std::uint64_t hash() const;
};

struct UnitCellMesh : Mesh {
  std::vector<int> boundary_nodes;
  bool symmetric = false;
  CellGeometry geometry;
};

/// Diagonal orientation of grid square (i, j): true means the square is cut
/// from its lower-left to its upper-right corner. Mirrored per quadrant of
/// each pattern block so that even blocks are symmetric about both midplanes.
bool diagonal_is_rising(int i, int j, int period);

UnitCellMesh build_unit_cell_mesh(int n_div, const std::optional<Circle>& inclusion);

Mesh build_macro_mesh(const Box& domain, std::array<int, 2> n_div, const BoundaryTagging& tagging);

Mesh build_fine_mesh(const Box& domain, double epsilon, int per_cell_div, const CellGeometry& geometry,
                     const BoundaryTagging& tagging);

/// Number of cells of size epsilon along each axis; throws when the box is
/// not a whole number of cells or is not aligned with the cell lattice.
std::array<int, 2> cells_per_axis(const Box& domain, double epsilon);

/// Fractional part of x / epsilon in [0, 1).
Eigen::Vector2d micro_coordinate(const Eigen::Vector2d& x, double epsilon);

}  // namespace homs
