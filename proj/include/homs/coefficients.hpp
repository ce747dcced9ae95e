#pragma once

#include <array>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "homs/expression.hpp"
#include "homs/mesh.hpp"

namespace homs {

class EllipticityError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

using Mat2 = Eigen::Matrix2d;
/// Fourth-order 2D tensor stored as a 4×4 matrix, row (i,j) -> 2i+j and
/// column (k,l) -> 2k+l.
using Tensor4 = Eigen::Matrix4d;

inline int pair_index(int i, int j) { return 2 * i + j; }
inline double& t4(Tensor4& D, int i, int j, int k, int l) { return D(2 * i + j, 2 * k + l); }
inline double t4(const Tensor4& D, int i, int j, int k, int l) { return D(2 * i + j, 2 * k + l); }

/// D:A, i.e. (D:A)_ij = D_ijkl A_kl.
Mat2 contract(const Tensor4& D, const Mat2& A);
/// 3×3 Voigt matrix (11, 22, 12) of a tensor with minor symmetries.
Eigen::Matrix3d voigt(const Tensor4& D);
/// Plane-strain isotropic elasticity tensor.
Tensor4 plane_strain(double E, double nu);
double symmetry_defect(const Mat2& A);
/// max over minor and major symmetry violations.
double symmetry_defect(const Tensor4& D);

enum class Family { E = 0, Nu = 1, K = 2, G = 3, Alpha = 4, Beta = 5 };
constexpr int kFamilies = 6;
const char* family_name(Family f);

struct PhaseProperties {
  double E = 1.0;
  double nu = 0.3;
  double k = 1.0;
  double g = 1.0;
  double alpha = 0.0;
  double beta = 0.0;

  double get(Family f) const;
  void set(Family f, double v);
};

/// Macro factor ã(x) = offset + scale·ψ(x) of one coefficient family.
struct MacroFactor {
  double offset = 0.0;
  double scale = 1.0;
};

enum class CouplingMode { Product, Sum, General };

struct CoefficientBundle {
  Mat2 k = Mat2::Identity();
  Mat2 g = Mat2::Identity();
  Mat2 alpha = Mat2::Zero();
  Mat2 beta = Mat2::Zero();
  Tensor4 D = Tensor4::Zero();

  Mat2 thermal_stress() const { return contract(D, alpha); }
  Mat2 moisture_stress() const { return contract(D, beta); }
};

struct MaterialModel {
  CouplingMode mode = CouplingMode::Product;
  PhaseProperties matrix;
  PhaseProperties inclusion;
  CellGeometry geometry;
  Expression weight{1.0};  // ψ
  std::array<MacroFactor, kFamilies> factors{};
  /// Used only in General mode: value of a family at macro point x given the
  /// micro value.
  std::function<double(Family, const Eigen::Vector2d&, double)> combiner;

  double factor(Family f, const Eigen::Vector2d& x) const;
  /// Scalar coefficient values at x for a phase, without any checks.
  PhaseProperties scalars(const Eigen::Vector2d& x, Phase phase) const;
  std::uint64_t hash() const;
};

/// Example-1 material models: product form and scale-coupled sum form.
MaterialModel example1_model();
MaterialModel coupled_model();
MaterialModel constant_model(const PhaseProperties& p);

CoefficientBundle bundle_from_scalars(const PhaseProperties& p);
CoefficientBundle evaluate_phase(const MaterialModel& model, const Eigen::Vector2d& x, Phase phase);
CoefficientBundle evaluate(const MaterialModel& model, const Eigen::Vector2d& x, const Eigen::Vector2d& y);

struct AssumptionReport {
  double min_eig_k = 0.0;
  double min_eig_g = 0.0;
  double min_eig_alpha = 0.0;
  double min_eig_beta = 0.0;
  double min_eig_D = 0.0;
  double symmetry_defect = 0.0;
  bool elliptic() const { return min_eig_k > 0 && min_eig_g > 0 && min_eig_D > 0; }
};

AssumptionReport validate_assumptions(const MaterialModel& model, const std::vector<Eigen::Vector2d>& x_samples,
                                      const std::vector<Eigen::Vector2d>& y_samples);

/// Scale-separated form a(x,y) = ω(x)·a*(y): ω is the weight ψ and the star
/// model carries the x-independent micro values.
struct SeparatedModel {
  Expression omega;
  MaterialModel star;
};

/// Throws std::invalid_argument when the model does not separate (sum or
/// general mode, a non-constant factor for ν, an offset on another family).
SeparatedModel separate(const MaterialModel& model);
bool is_separable(const MaterialModel& model);

}  // namespace homs
