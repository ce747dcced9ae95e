#pragma once

#include <memory>
#include <stdexcept>

#include "homs/cell_problems.hpp"
#include "homs/homogenize.hpp"
#include "homs/macro_solver.hpp"

namespace homs {

enum class Order { Homogenized = 0, Loms = 1, Homs = 2 };
const char* order_name(Order o);

class ReconstructionError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct ReconstructionInputs {
  double epsilon = 0.1;
  std::shared_ptr<const Mesh> fine;
  const MacroSolution* macro = nullptr;  // derivatives recovered
  Order order = Order::Homs;
};

/// Separated model data: x-independent cell functions plus the weight ω.
struct SeparatedCellData {
  std::shared_ptr<const UnitCellMesh> cell;
  Expression omega{1.0};
  FirstOrderCellSet first;     // H, L, X, M~, N~
  StarSecondOrderSet second;   // star functions
};

/// General path: cell functions interpolated over the representative grid.
MacroSolution reconstruct(const ReconstructionInputs& in, const CellSetGrid& sets);
/// Closed ω-weighted combination of the separated model.
MacroSolution reconstruct_separated(const ReconstructionInputs& in, const SeparatedCellData& data);

}  // namespace homs
