#include "homs/reference.hpp"

#include <cmath>
#include <stdexcept>

namespace homs {

CoupledCoefficients fine_coefficients(const Mesh& fine, const MaterialModel& model, double epsilon) {
  if (fine.grid.pattern_period < 4) throw std::invalid_argument("fine mesh must resolve each cell (per_cell_div >= 4)");
  const double h = epsilon / fine.grid.pattern_period;
  if (std::abs(h - fine.grid.spacing.x()) > 1e-9 * h || std::abs(h - fine.grid.spacing.y()) > 1e-9 * h)
    throw std::invalid_argument("fine mesh was not built for this epsilon");
  CoupledCoefficients c;
  const auto ne = fine.elements.size();
  c.k.resize(ne);
  c.g.resize(ne);
  c.A.resize(ne);
  c.B.resize(ne);
  c.D.resize(ne);
  for (int e = 0; e < fine.num_elements(); ++e) {
    const Eigen::Vector2d x = fine.centroid(e);
    // the element tag already encodes the phase at y = x/ε mod 1
    const CoefficientBundle b = evaluate_phase(model, x, fine.phases[e]);
    c.k[e] = b.k;
    c.g[e] = b.g;
    c.D[e] = b.D;
    c.A[e] = b.thermal_stress();
    c.B[e] = b.moisture_stress();
  }
  return c;
}

MacroSolution solve_reference(std::shared_ptr<const Mesh> fine, const MaterialModel& model, double epsilon,
                              const Sources& sources, const BoundaryData& bcs) {
  return solve_coupled(fine, fine_coefficients(*fine, model, epsilon), sources, bcs);
}

}  // namespace homs
