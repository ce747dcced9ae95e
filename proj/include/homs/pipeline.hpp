#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "homs/cache.hpp"
#include "homs/config.hpp"
#include "homs/homogenize.hpp"
#include "homs/metrics.hpp"
#include "homs/reconstruct.hpp"

namespace homs {

/// Offline results of the general path over the representative grid.
struct OfflineResult {
  CellSetGrid sets;
  HomogenizedField homog;
  std::uint64_t key = 0;
  bool from_cache = false;
  double seconds = 0.0;
};

/// Offline results of the separated path. `homog` holds ω(x_I)·star on the
/// grid (ω² for Â and B̂) and drives the separated macro solve.
struct SeparatedOffline {
  SeparatedCellData data;
  HomogenizedTensors star_hom;
  HomogenizedField homog;
  std::uint64_t key = 0;
  bool from_cache = false;
  double seconds = 0.0;
};

std::uint64_t offline_key(const MaterialModel& model, const UnitCellMesh& cell, const RepresentativeGrid& grid,
                          bool second);
std::uint64_t separated_key(const MaterialModel& model, const UnitCellMesh& cell);

/// Derivative stencil of grid point `idx`: central inside, one-sided on the
/// grid edges, zero step along an axis with a single point.
Stencil grid_stencil(const RepresentativeGrid& grid, int idx, const std::vector<FirstOrderCellSet>& first,
                     const std::vector<HomogenizedTensors>& hom);

/// Solves (or loads from `cache` when given) every cell problem on the grid.
/// Results are ordered by grid index independently of `threads`.
OfflineResult run_offline(std::shared_ptr<const UnitCellMesh> cell, const MaterialModel& model,
                          const RepresentativeGrid& grid, int threads, const CellCache* cache, bool second = true);
/// Cache lookup only; nullopt when the entry does not exist.
std::optional<OfflineResult> load_offline(std::shared_ptr<const UnitCellMesh> cell, const MaterialModel& model,
                                          const RepresentativeGrid& grid, const CellCache& cache, bool second = true);

SeparatedOffline run_offline_separated(std::shared_ptr<const UnitCellMesh> cell, const MaterialModel& model,
                                       const RepresentativeGrid& grid, const CellCache* cache);
std::optional<SeparatedOffline> load_offline_separated(std::shared_ptr<const UnitCellMesh> cell,
                                                       const MaterialModel& model, const RepresentativeGrid& grid,
                                                       const CellCache& cache);

struct StageTiming {
  std::string stage;
  int nodes = 0;
  int elements = 0;
  int solves = 0;
  double seconds = 0.0;
};

struct PathResults {
  std::optional<MacroSolution> macro;
  std::array<std::optional<MacroSolution>, 3> recon;  // indexed by Order
  std::optional<ErrorReport> report;
  std::map<std::string, double> residuals;  // "T_homs", "u_loms", ...
};

struct ExperimentOutputs {
  double epsilon = 0.0;
  std::shared_ptr<const UnitCellMesh> cell;
  std::shared_ptr<const Mesh> macro_mesh;
  std::shared_ptr<const Mesh> fine_mesh;
  std::optional<OfflineResult> offline;
  std::optional<SeparatedOffline> separated_offline;
  PathResults general;
  PathResults separated;
  std::optional<MacroSolution> reference;
  std::vector<StageTiming> timings;
  bool offline_computed = false;  // false when every cell set came from the cache
};

/// Runs the requested stages for one ε. Online stages read the cell cache
/// and throw CacheError when it is missing unless "cell" is requested too.
ExperimentOutputs run_experiment(const RunConfig& cfg, double epsilon, const std::set<std::string>& stages);

/// Writes CSV, VTK and manifest files for the stages that ran.
void write_outputs(const RunConfig& cfg, const ExperimentOutputs& out, const std::set<std::string>& stages,
                   const std::string& dir);

struct ConvergenceRow {
  double epsilon = 0.0;
  int fine_nodes = 0;
  ErrorReport report;
};

struct ConvergenceResult {
  std::vector<ConvergenceRow> rows;
  /// slope of the H1 error per field and order, keyed like "T_homs"
  std::map<std::string, double> rates;
};

/// ε sweep with the cell cache shared by all runs. With fine_spacing > 0 the
/// reference mesh density is kept fixed across ε.
ConvergenceResult run_convergence(const RunConfig& cfg, const std::vector<double>& eps_list, double fine_spacing);
void write_convergence_csv(const std::string& path, const ConvergenceResult& r);

std::string cache_root(const RunConfig& cfg);

}  // namespace homs
