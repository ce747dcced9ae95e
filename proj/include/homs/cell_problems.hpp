#pragma once

#include <array>
#include <vector>

#include <Eigen/Core>

#include "homs/coefficients.hpp"
#include "homs/fem.hpp"
#include "homs/mesh.hpp"

namespace homs {

// Cell functions are stored column-wise in one (nodes × columns) matrix per
// representative point so that interpolation in x is a weighted matrix sum.
// Vector-valued functions take two consecutive columns (components 0, 1).
namespace col {
// first-order block
constexpr int H(int a) { return a; }
constexpr int L(int a) { return 2 + a; }
constexpr int X(int a1, int h, int k) { return 4 + (a1 * 2 + h) * 2 + k; }
constexpr int M(int k) { return 12 + k; }
constexpr int N(int k) { return 14 + k; }
constexpr int kFirst = 16;

// second-order block (general path)
constexpr int H2(int a1, int a2) { return a1 * 2 + a2; }
constexpr int R(int a1) { return 4 + a1; }
constexpr int L2(int a1, int a2) { return 6 + a1 * 2 + a2; }
constexpr int S(int a1) { return 10 + a1; }
constexpr int P(int a1, int a2, int h, int k) { return 12 + ((a1 * 2 + a2) * 2 + h) * 2 + k; }
constexpr int Q(int a1, int h, int k) { return 28 + (a1 * 2 + h) * 2 + k; }
constexpr int W(int k) { return 36 + k; }
constexpr int Z(int a1, int k) { return 38 + a1 * 2 + k; }
constexpr int F(int k) { return 42 + k; }
constexpr int G(int a1, int k) { return 44 + a1 * 2 + k; }
constexpr int kSecond = 48;

// second-order block of the separated path (x-independent star functions)
namespace star {
constexpr int H2(int a1, int a2) { return a1 * 2 + a2; }
constexpr int L2(int a1, int a2) { return 4 + a1 * 2 + a2; }
constexpr int P(int a1, int a2, int h, int k) { return 8 + ((a1 * 2 + a2) * 2 + h) * 2 + k; }
constexpr int R(int a1, int a2) { return 24 + a1 * 2 + a2; }
constexpr int S(int a1, int a2) { return 28 + a1 * 2 + a2; }
constexpr int Q(int a1, int a2, int h, int k) { return 32 + ((a1 * 2 + a2) * 2 + h) * 2 + k; }
constexpr int W(int a1, int k) { return 48 + a1 * 2 + k; }
constexpr int Z(int a1, int k) { return 52 + a1 * 2 + k; }
constexpr int F(int a1, int k) { return 56 + a1 * 2 + k; }
constexpr int G(int a1, int k) { return 60 + a1 * 2 + k; }
constexpr int kCount = 64;
}  // namespace star
}  // namespace col

/// Coefficients of the cell problems at one macro point, one entry per cell
/// element (the element phase decides the micro value).
struct CellCoefficients {
  std::vector<Mat2> k, g, alpha, beta, Dalpha, Dbeta;
  std::vector<Tensor4> D;
};

CellCoefficients cell_coefficients(const Mesh& cell, const MaterialModel& model, const Eigen::Vector2d& x);

struct HomogenizedTensors {
  Mat2 k = Mat2::Zero();
  Mat2 g = Mat2::Zero();
  Tensor4 D = Tensor4::Zero();
  Mat2 A = Mat2::Zero();
  Mat2 B = Mat2::Zero();
};

/// H_a, L_a, X^a_{.h}, M, N at one macro point.
struct FirstOrderCellSet {
  Eigen::Vector2d x = Eigen::Vector2d::Zero();
  Eigen::MatrixXd data;  // nodes × col::kFirst
};

/// The ten second-order families at one macro point.
struct SecondOrderCellSet {
  Eigen::Vector2d x = Eigen::Vector2d::Zero();
  Eigen::MatrixXd data;  // nodes × col::kSecond
};

/// x-independent second-order functions of the separated model.
struct StarSecondOrderSet {
  Eigen::MatrixXd data;  // nodes × col::star::kCount
};

/// Interleaved nodal vector (node-major) of a vector cell function stored in
/// columns c0, c0+1; and the inverse.
Vec vector_field(const Eigen::MatrixXd& data, int c0);
void store_vector_field(Eigen::MatrixXd& data, int c0, const Vec& v);

/// Factorized cell operators (homogeneous Dirichlet on ∂Y) at one x.
struct CellOperators {
  CellOperators(const UnitCellMesh& cell, const CellCoefficients& coeff);
  SpdSolver thermal;
  SpdSolver moisture;
  SpdSolver elastic;
};

FirstOrderCellSet solve_first_order(const UnitCellMesh& cell, const MaterialModel& model, const Eigen::Vector2d& x);
FirstOrderCellSet solve_first_order(const UnitCellMesh& cell, const CellCoefficients& coeff, const CellOperators& ops,
                                    const Eigen::Vector2d& x);

/// Per-element quantities whose x-derivatives enter the second-order loads:
///   k-part  (k̂ - k)_{i a1} - (k ∇H_a1)_i
///   g-part  analogous
///   X-part  D̂_{ijh a1} - D_{ijh a1} - D_ijkl ∂_l X^a1_kh
///   M-part  D_ijkl (∂_l M_k + α_kl) - Â_ij,  N-part analogous
namespace ecol {
constexpr int K(int a1, int i) { return a1 * 2 + i; }
constexpr int G(int a1, int i) { return 4 + a1 * 2 + i; }
constexpr int X(int a1, int h, int i, int j) { return 8 + ((a1 * 2 + h) * 2 + i) * 2 + j; }
constexpr int M(int i, int j) { return 24 + i * 2 + j; }
constexpr int N(int i, int j) { return 28 + i * 2 + j; }
constexpr int kCount = 32;
}  // namespace ecol

Eigen::MatrixXd element_quantities(const Mesh& cell, const CellCoefficients& coeff, const FirstOrderCellSet& first,
                                   const HomogenizedTensors& hom);

/// First-order sets and homogenized tensors around x_I used for the
/// x-derivatives. Along axis m the derivative is (hi - lo) / (x_hi - x_lo);
/// when lo and hi coincide with the center on one side the difference is
/// one-sided, and when step[m] == 0 the derivative is taken as zero.
struct StencilPoint {
  const FirstOrderCellSet* set = nullptr;
  HomogenizedTensors hom;
};

struct Stencil {
  StencilPoint center;
  std::array<StencilPoint, 2> lo;
  std::array<StencilPoint, 2> hi;
  std::array<double, 2> step{0.0, 0.0};
};

SecondOrderCellSet solve_second_order(const UnitCellMesh& cell, const MaterialModel& model, const Stencil& stencil);

/// Separated model: star first-order set (M̃, Ñ in the M, N columns) and the
/// star second-order functions.
FirstOrderCellSet solve_first_order_separated(const UnitCellMesh& cell, const MaterialModel& star_model);
StarSecondOrderSet solve_second_order_separated(const UnitCellMesh& cell, const MaterialModel& star_model,
                                                const FirstOrderCellSet& star_first,
                                                const HomogenizedTensors& star_hom);

}  // namespace homs
