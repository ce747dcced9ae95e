#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "homs/coefficients.hpp"
#include "homs/mesh.hpp"

namespace homs {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

class SolverError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Degrees of freedom are node-major: dof = node * components + component.
struct SparseSystem {
  SpMat A;
  Vec b;
  int components = 1;
  std::map<int, double> constraints;  // dof -> prescribed value
};

// ---- bilinear forms (one centroid point per element for the coefficient)

/// Element matrix ∫ ∇φ_a · K ∇φ_b on element e.
Eigen::Matrix3d scalar_element_matrix(const Mesh& mesh, int e, const Mat2& K);
/// Element matrix of the elasticity form, rows/cols ordered (node a, comp i).
Eigen::Matrix<double, 6, 6> elasticity_element_matrix(const Mesh& mesh, int e, const Tensor4& D);

SpMat assemble_scalar(const Mesh& mesh, const std::vector<Mat2>& per_element);
SpMat assemble_scalar(const Mesh& mesh, const std::function<Mat2(const Eigen::Vector2d&)>& coeff);
SpMat assemble_elasticity(const Mesh& mesh, const std::vector<Tensor4>& per_element);
SpMat assemble_elasticity(const Mesh& mesh, const std::function<Tensor4(const Eigen::Vector2d&)>& coeff);

// ---- loads, all accumulate into rhs

/// ∫ f·v with the three-point vertex rule. f returns `components` values.
void assemble_volume_load(const Mesh& mesh, int components,
                          const std::function<Eigen::VectorXd(const Eigen::Vector2d&)>& f, Vec& rhs);
/// Element-wise constant source: values[e * components + i].
void assemble_element_load(const Mesh& mesh, int components, const std::vector<double>& values, Vec& rhs);
/// ∫ q·∇v (scalar, q[e] is a 2-vector stored at 2e..2e+1) or ∫ q_ij ∂_j v_i
/// (vector, q[e] is a 2×2 matrix stored row-major at 4e..4e+3).
void assemble_flux_load(const Mesh& mesh, int components, const std::vector<double>& q, Vec& rhs);
/// ∫ (A T) : ∇v with A an element-wise tensor and T a nodal scalar field.
void assemble_coupling_load(const Mesh& mesh, const std::vector<Mat2>& tensor, const Vec& scalar_field, Vec& rhs);
/// Trapezoid edge rule on all boundary edges carrying `tag`.
void assemble_neumann_load(const Mesh& mesh, unsigned tag, int components,
                           const std::function<Eigen::VectorXd(const Eigen::Vector2d&)>& flux, Vec& rhs);

/// Constraints for every node lying on an edge tagged with `tag`.
std::map<int, double> dirichlet_constraints(const Mesh& mesh, unsigned tag, int components,
                                            const std::function<Eigen::VectorXd(const Eigen::Vector2d&)>& value);
/// Homogeneous constraints on a list of nodes (all components).
std::map<int, double> zero_constraints(const std::vector<int>& nodes, int components);

/// Reduced system after symmetric elimination of constrained dofs.
struct ConstrainedSystem {
  SpMat A;  // free × free
  Vec b;
  std::vector<int> free_dofs;      // reduced index -> full dof
  std::vector<int> reduced_index;  // full dof -> reduced index or -1
  Vec full_values;                 // prescribed values in place, zeros elsewhere
};

ConstrainedSystem apply_dirichlet(const SparseSystem& system);

/// Cholesky factorization of the constrained operator, reusable across loads.
/// Every solve is checked against a 1e-10 relative residual.
class SpdSolver {
public:
  SpdSolver(const SpMat& A, const std::map<int, double>& constraints);
  /// Full-length solution for a full-length rhs; constrained dofs take their
  /// prescribed values.
  Vec solve(const Vec& rhs) const;
  double last_residual() const { return last_residual_; }
  int free_count() const { return static_cast<int>(free_dofs_.size()); }

private:
  SpMat A_full_;
  SpMat A_ff_;
  SpMat A_fc_;
  std::vector<int> free_dofs_;
  std::vector<int> constrained_dofs_;
  Vec constrained_values_;
  Eigen::SimplicialLLT<SpMat> llt_;
  mutable double last_residual_ = 0.0;
};

Vec solve_spd(const SparseSystem& system);

// ---- nodal fields

struct FieldSolution {
  std::shared_ptr<const Mesh> mesh;
  int components = 1;
  Vec values;                              // node-major
  std::optional<Eigen::MatrixXd> gradient; // (node*components + c, d)
  std::optional<Eigen::MatrixXd> hessian;  // (node*components + c, 2*d1 + d2)

  double value(int node, int c = 0) const { return values[node * components + c]; }
  /// Constant gradient of component c on element e.
  Eigen::Vector2d element_gradient(int e, int c = 0) const;
  double element_mean(int e, int c = 0) const;
  /// P1 interpolation at an arbitrary point.
  double interpolate(const Eigen::Vector2d& x, int c = 0) const;
};

FieldSolution make_field(std::shared_ptr<const Mesh> mesh, int components, Vec values);

/// Area-weighted average of the element gradients around each node.
Eigen::MatrixXd recover_gradient(const Mesh& mesh, int components, const Vec& values);
void recover_gradient(FieldSolution& s);
/// Gradient recovery applied to the recovered gradient, then symmetrized.
void recover_hessian(FieldSolution& s);

}  // namespace homs
