#pragma once

#include <array>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "homs/coefficients.hpp"
#include "homs/fem.hpp"
#include "homs/macro_solver.hpp"

namespace homs {

enum class Norm { L2, H1semi };

/// ‖a - r‖ / ‖r‖ on the shared mesh. L2 uses the three-point vertex rule,
/// the H1 semi-norm the element-wise constant gradients. Throws when the
/// reference norm is zero.
double relative_error(const FieldSolution& approx, const FieldSolution& reference, Norm norm);
/// Unnormalized ‖a - r‖.
double error_norm(const FieldSolution& approx, const FieldSolution& reference, Norm norm);
double field_norm(const FieldSolution& f, Norm norm);

enum class FieldKind { T, c, u };

/// Fine-scale discrete residual ‖b - A x‖ over unconstrained dofs divided
/// by ‖b‖ over the same dofs. For u the eigenstress load is built from the
/// T and c members of `fields`.
double residual_diagnostic(const Mesh& fine, const MaterialModel& model, double epsilon, const MacroSolution& fields,
                           FieldKind kind, const Sources& sources, const BoundaryData& bcs);

/// Least-squares slope of log(error) against log(eps).
double fit_convergence_rate(const std::vector<std::pair<double, double>>& eps_error);

/// Relative errors per field and order, keyed as TerrorL20 ... uerrorH12.
struct ErrorReport {
  std::string experiment;
  std::map<std::string, double> errors;
  std::vector<std::pair<std::string, double>> timings;  // stage -> seconds

  static std::string key(FieldKind f, Norm n, int order);
  double get(FieldKind f, Norm n, int order) const { return errors.at(key(f, n, order)); }
  static std::vector<std::string> columns();
};

/// approx[o] is the order-o reconstruction on the reference mesh.
ErrorReport compare(const std::string& experiment, const std::array<const MacroSolution*, 3>& approx,
                    const MacroSolution& reference);

void write_error_csv(const std::string& path, const std::vector<ErrorReport>& reports);

}  // namespace homs
