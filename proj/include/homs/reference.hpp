#pragma once

#include <memory>

#include "homs/coefficients.hpp"
#include "homs/macro_solver.hpp"

namespace homs {

/// Oscillatory coefficients a(x, x/ε) at the fine-mesh element centroids.
CoupledCoefficients fine_coefficients(const Mesh& fine, const MaterialModel& model, double epsilon);

/// Direct solve of the full coupled problem on a cell-resolving mesh.
MacroSolution solve_reference(std::shared_ptr<const Mesh> fine, const MaterialModel& model, double epsilon,
                              const Sources& sources, const BoundaryData& bcs);

}  // namespace homs
