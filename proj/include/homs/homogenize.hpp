#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "homs/cell_problems.hpp"

namespace homs {

HomogenizedTensors compute_homogenized(const UnitCellMesh& cell, const CellCoefficients& coeff,
                                       const FirstOrderCellSet& first);
HomogenizedTensors compute_homogenized(const UnitCellMesh& cell, const MaterialModel& model,
                                       const Eigen::Vector2d& x, const FirstOrderCellSet& first);

/// Tensor-product grid of representative macro points, corners included.
struct RepresentativeGrid {
  Box domain;
  std::array<int, 2> n{1, 1};
  std::array<std::vector<double>, 2> coords;
  Eigen::Vector2d spacing{0.0, 0.0};  // zero along an axis with one point

  int size() const { return n[0] * n[1]; }
  int index(int a, int b) const { return b * n[0] + a; }
  Eigen::Vector2d point(int idx) const { return {coords[0][idx % n[0]], coords[1][idx / n[0]]}; }

  struct Weight {
    int index;
    double w;
  };
  /// Multilinear weights of x (clamped into the grid box); at most 4 entries.
  int weights(const Eigen::Vector2d& x, std::array<Weight, 4>& out) const;
};

RepresentativeGrid build_representative_grid(const Box& domain, std::array<int, 2> n_rep);

struct HomogenizedField {
  RepresentativeGrid grid;
  std::vector<HomogenizedTensors> values;  // one per grid point
};

HomogenizedTensors interpolate_tensor(const HomogenizedField& field, const Eigen::Vector2d& x);

/// Offline results over the representative grid.
struct CellSetGrid {
  RepresentativeGrid grid;
  std::shared_ptr<const UnitCellMesh> cell;
  std::vector<FirstOrderCellSet> first;
  std::vector<SecondOrderCellSet> second;  // may be empty (first order only)
};

/// Nodal-value-wise multilinear interpolation of the stored matrices.
/// `second` selects the second-order block.
Eigen::MatrixXd interpolate_cell_function(const CellSetGrid& sets, const Eigen::Vector2d& x, bool second);

/// One row per grid point: x1, x2, Voigt entries of k̂, ĝ, D̂, Â, B̂.
void write_homogenized_csv(const std::string& path, const HomogenizedField& field);

}  // namespace homs
