#pragma once

#include <array>
#include <memory>
#include <vector>

#include "homs/expression.hpp"
#include "homs/fem.hpp"
#include "homs/homogenize.hpp"

namespace homs {

struct Sources {
  Expression h{0.0};
  Expression m{0.0};
  std::array<Expression, 2> f{Expression(0.0), Expression(0.0)};
};

/// Prescribed data; each entry is used on the boundary part carrying the
/// matching tag (T̄ on Γ_T, q̄ on Γ_q, ...).
struct BoundaryData {
  Expression T{0.0};
  Expression q{0.0};
  Expression c{0.0};
  Expression d{0.0};
  std::array<Expression, 2> u{Expression(0.0), Expression(0.0)};
  std::array<Expression, 2> sigma{Expression(0.0), Expression(0.0)};
};

/// Element-wise coefficients of a coupled problem:
///   -div(k ∇T) = h,  -div(g ∇c) = m,  -div(D ∇u - A T - B c) = f.
struct CoupledCoefficients {
  std::vector<Mat2> k, g, A, B;
  std::vector<Tensor4> D;
};

struct MacroSolution {
  FieldSolution T;
  FieldSolution c;
  FieldSolution u;
};

FieldSolution solve_scalar_field(std::shared_ptr<const Mesh> mesh, const std::vector<Mat2>& coeff,
                                 const Expression& source, unsigned dirichlet_tag, const Expression& value,
                                 unsigned flux_tag, const Expression& flux);
FieldSolution solve_displacement(std::shared_ptr<const Mesh> mesh, const CoupledCoefficients& coeff,
                                 const FieldSolution& T, const FieldSolution& c, const Sources& sources,
                                 const BoundaryData& bcs);
MacroSolution solve_coupled(std::shared_ptr<const Mesh> mesh, const CoupledCoefficients& coeff,
                            const Sources& sources, const BoundaryData& bcs);

/// Homogenized tensors interpolated to the element centroids.
CoupledCoefficients homogenized_coefficients(const Mesh& mesh, const HomogenizedField& homog);

MacroSolution solve_homogenized(std::shared_ptr<const Mesh> mesh, const HomogenizedField& homog,
                                const Sources& sources, const BoundaryData& bcs);

/// Recovered gradients and Hessians of T, c and both u components.
void prepare_macro_derivatives(MacroSolution& s);

}  // namespace homs
