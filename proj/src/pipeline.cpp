#include "homs/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "homs/hash.hpp"
#include "homs/reference.hpp"
#include "homs/vtk.hpp"

namespace homs {

namespace fs = std::filesystem;

namespace {

constexpr int kCacheFormat = 1;

using Clock = std::chrono::steady_clock;
double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Runs body(i) for i in [0, n) on `threads` workers; the first exception is
// rethrown after all workers stop.
template <class F>
void parallel_for(int n, int threads, F&& body) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int i; (i = next.fetch_add(1)) < n;) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

std::string point_name(const char* prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s/%05d", prefix, i);
  return buf;
}

constexpr int kTensorCols = 32;

Eigen::RowVectorXd pack(const HomogenizedTensors& t) {
  Eigen::RowVectorXd r(kTensorCols);
  r.segment(0, 4) = Eigen::Map<const Eigen::RowVector4d>(t.k.data());
  r.segment(4, 4) = Eigen::Map<const Eigen::RowVector4d>(t.g.data());
  r.segment(8, 16) = Eigen::Map<const Eigen::Matrix<double, 1, 16>>(t.D.data());
  r.segment(24, 4) = Eigen::Map<const Eigen::RowVector4d>(t.A.data());
  r.segment(28, 4) = Eigen::Map<const Eigen::RowVector4d>(t.B.data());
  return r;
}

HomogenizedTensors unpack(const Eigen::RowVectorXd& r) {
  HomogenizedTensors t;
  Eigen::Map<Eigen::RowVector4d>(t.k.data()) = r.segment(0, 4);
  Eigen::Map<Eigen::RowVector4d>(t.g.data()) = r.segment(4, 4);
  Eigen::Map<Eigen::Matrix<double, 1, 16>>(t.D.data()) = r.segment(8, 16);
  Eigen::Map<Eigen::RowVector4d>(t.A.data()) = r.segment(24, 4);
  Eigen::Map<Eigen::RowVector4d>(t.B.data()) = r.segment(28, 4);
  return t;
}

void hash_grid(Fnv1a& h, const RepresentativeGrid& grid) {
  h.pod(grid.domain.lo.x());
  h.pod(grid.domain.lo.y());
  h.pod(grid.domain.hi.x());
  h.pod(grid.domain.hi.y());
  h.pod(grid.n[0]);
  h.pod(grid.n[1]);
}

const Eigen::MatrixXd& need(const MatrixBundle& b, const std::string& name) {
  auto it = b.find(name);
  if (it == b.end()) throw CacheError("cache entry lacks '" + name + "'");
  return it->second;
}

OfflineResult from_bundle(std::shared_ptr<const UnitCellMesh> cell, const RepresentativeGrid& grid,
                          const MatrixBundle& b, bool second) {
  OfflineResult r;
  r.sets.grid = grid;
  r.sets.cell = cell;
  r.homog.grid = grid;
  const Eigen::MatrixXd& hom = need(b, "homogenized");
  if (hom.rows() != grid.size() || hom.cols() != kTensorCols) throw CacheError("cache entry has wrong shape");
  for (int i = 0; i < grid.size(); ++i) {
    r.homog.values.push_back(unpack(hom.row(i)));
    FirstOrderCellSet f;
    f.x = grid.point(i);
    f.data = need(b, point_name("first", i));
    if (f.data.rows() != cell->num_nodes()) throw CacheError("cache entry has wrong shape");
    r.sets.first.push_back(std::move(f));
    if (second) {
      SecondOrderCellSet s;
      s.x = grid.point(i);
      s.data = need(b, point_name("second", i));
      r.sets.second.push_back(std::move(s));
    }
  }
  return r;
}

HomogenizedField separated_field(const RepresentativeGrid& grid, const Expression& omega,
                                 const HomogenizedTensors& star) {
  HomogenizedField f;
  f.grid = grid;
  for (int i = 0; i < grid.size(); ++i) {
    const double w = omega.value(grid.point(i));
    HomogenizedTensors t;
    t.k = w * star.k;
    t.g = w * star.g;
    t.D = w * star.D;
    t.A = w * w * star.A;
    t.B = w * w * star.B;
    f.values.push_back(t);
  }
  return f;
}

SeparatedOffline separated_from_bundle(std::shared_ptr<const UnitCellMesh> cell, const MaterialModel& model,
                                       const RepresentativeGrid& grid, const MatrixBundle& b) {
  const SeparatedModel sep = separate(model);
  SeparatedOffline r;
  r.data.cell = cell;
  r.data.omega = sep.omega;
  r.data.first.data = need(b, "first");
  r.data.second.data = need(b, "second");
  if (r.data.first.data.rows() != cell->num_nodes()) throw CacheError("cache entry has wrong shape");
  r.star_hom = unpack(need(b, "homogenized").row(0));
  r.homog = separated_field(grid, sep.omega, r.star_hom);
  return r;
}

}  // namespace

std::uint64_t offline_key(const MaterialModel& model, const UnitCellMesh& cell, const RepresentativeGrid& grid,
                          bool second) {
  Fnv1a h;
  h.str("general");
  h.pod(kCacheFormat);
  h.pod(model.hash());
  h.pod(cell.hash());
  hash_grid(h, grid);
  h.pod(second);
  return h.value();
}

std::uint64_t separated_key(const MaterialModel& model, const UnitCellMesh& cell) {
  Fnv1a h;
  h.str("separated");
  h.pod(kCacheFormat);
  h.pod(model.hash());
  h.pod(cell.hash());
  return h.value();
}

Stencil grid_stencil(const RepresentativeGrid& grid, int idx, const std::vector<FirstOrderCellSet>& first,
                     const std::vector<HomogenizedTensors>& hom) {
  auto point = [&](int i) { return StencilPoint{&first[i], hom[i]}; };
  Stencil st;
  st.center = point(idx);
  const int ij[2] = {idx % grid.n[0], idx / grid.n[0]};
  for (int m = 0; m < 2; ++m) {
    st.lo[m] = st.hi[m] = st.center;
    if (grid.n[m] == 1) continue;
    int lo[2] = {ij[0], ij[1]}, hi[2] = {ij[0], ij[1]};
    lo[m] = std::max(ij[m] - 1, 0);
    hi[m] = std::min(ij[m] + 1, grid.n[m] - 1);
    st.lo[m] = point(grid.index(lo[0], lo[1]));
    st.hi[m] = point(grid.index(hi[0], hi[1]));
    st.step[m] = grid.coords[m][hi[m]] - grid.coords[m][lo[m]];
  }
  return st;
}

std::optional<OfflineResult> load_offline(std::shared_ptr<const UnitCellMesh> cell, const MaterialModel& model,
                                          const RepresentativeGrid& grid, const CellCache& cache, bool second) {
  const auto key = offline_key(model, *cell, grid, second);
  const auto t0 = Clock::now();
  auto bundle = cache.load(key, "cells");
  if (!bundle) return std::nullopt;
  OfflineResult r = from_bundle(cell, grid, *bundle, second);
  r.key = key;
  r.from_cache = true;
  r.seconds = since(t0);
  return r;
}

OfflineResult run_offline(std::shared_ptr<const UnitCellMesh> cell, const MaterialModel& model,
                          const RepresentativeGrid& grid, int threads, const CellCache* cache, bool second) {
  if (cache)
    if (auto hit = load_offline(cell, model, grid, *cache, second)) return std::move(*hit);

  const auto t0 = Clock::now();
  const int n = grid.size();
  std::vector<FirstOrderCellSet> first(n);
  std::vector<HomogenizedTensors> hom(n);
  parallel_for(n, threads, [&](int i) {
    const Eigen::Vector2d x = grid.point(i);
    const CellCoefficients coeff = cell_coefficients(*cell, model, x);
    const CellOperators ops(*cell, coeff);
    first[i] = solve_first_order(*cell, coeff, ops, x);
    hom[i] = compute_homogenized(*cell, coeff, first[i]);
  });
  std::vector<SecondOrderCellSet> sec;
  if (second) {
    sec.resize(n);
    parallel_for(n, threads, [&](int i) { sec[i] = solve_second_order(*cell, model, grid_stencil(grid, i, first, hom)); });
  }

  OfflineResult r;
  r.key = offline_key(model, *cell, grid, second);
  r.sets.grid = grid;
  r.sets.cell = cell;
  r.sets.first = std::move(first);
  r.sets.second = std::move(sec);
  r.homog.grid = grid;
  r.homog.values = std::move(hom);
  r.seconds = since(t0);

  if (cache) {
    MatrixBundle b;
    Eigen::MatrixXd packed(n, kTensorCols);
    for (int i = 0; i < n; ++i) {
      packed.row(i) = pack(r.homog.values[i]);
      b[point_name("first", i)] = r.sets.first[i].data;
      if (second) b[point_name("second", i)] = r.sets.second[i].data;
    }
    b["homogenized"] = packed;
    cache->store(r.key, "cells", b);
  }
  return r;
}

std::optional<SeparatedOffline> load_offline_separated(std::shared_ptr<const UnitCellMesh> cell,
                                                       const MaterialModel& model, const RepresentativeGrid& grid,
                                                       const CellCache& cache) {
  const auto key = separated_key(model, *cell);
  const auto t0 = Clock::now();
  auto bundle = cache.load(key, "star");
  if (!bundle) return std::nullopt;
  SeparatedOffline r = separated_from_bundle(cell, model, grid, *bundle);
  r.key = key;
  r.from_cache = true;
  r.seconds = since(t0);
  return r;
}

SeparatedOffline run_offline_separated(std::shared_ptr<const UnitCellMesh> cell, const MaterialModel& model,
                                       const RepresentativeGrid& grid, const CellCache* cache) {
  if (cache)
    if (auto hit = load_offline_separated(cell, model, grid, *cache)) return std::move(*hit);
  const auto t0 = Clock::now();
  const SeparatedModel sep = separate(model);
  SeparatedOffline r;
  r.key = separated_key(model, *cell);
  r.data.cell = cell;
  r.data.omega = sep.omega;
  r.data.first = solve_first_order_separated(*cell, sep.star);
  r.star_hom = compute_homogenized(*cell, sep.star, r.data.first.x, r.data.first);
  r.data.second = solve_second_order_separated(*cell, sep.star, r.data.first, r.star_hom);
  r.homog = separated_field(grid, sep.omega, r.star_hom);
  r.seconds = since(t0);
  if (cache) {
    MatrixBundle b;
    b["first"] = r.data.first.data;
    b["second"] = r.data.second.data;
    b["homogenized"] = pack(r.star_hom);
    cache->store(r.key, "star", b);
  }
  return r;
}

std::string cache_root(const RunConfig& cfg) {
  return cfg.cache_dir.empty() ? (fs::path(cfg.out_dir) / "cache").string() : cfg.cache_dir;
}

namespace {

bool has(const std::set<std::string>& s, const char* k) { return s.count(k) > 0; }

void run_path(const ExperimentOutputs& out, PathResults& path, const HomogenizedField& homog, const RunConfig& cfg,
              double epsilon, bool want_recon, const std::function<MacroSolution(const ReconstructionInputs&)>& recon,
              std::vector<StageTiming>& timings, const std::string& label) {
  auto t0 = Clock::now();
  path.macro = solve_homogenized(out.macro_mesh, homog, cfg.sources, cfg.bcs);
  prepare_macro_derivatives(*path.macro);
  timings.push_back({"macro" + label, out.macro_mesh->num_nodes(), out.macro_mesh->num_elements(), 3, since(t0)});
  if (!want_recon) return;
  t0 = Clock::now();
  for (Order o : {Order::Homogenized, Order::Loms, Order::Homs}) {
    ReconstructionInputs in;
    in.epsilon = epsilon;
    in.fine = out.fine_mesh;
    in.macro = &*path.macro;
    in.order = o;
    path.recon[static_cast<int>(o)] = recon(in);
  }
  timings.push_back({"reconstruct" + label, out.fine_mesh->num_nodes(), out.fine_mesh->num_elements(), 0, since(t0)});
}

void compare_path(const ExperimentOutputs& out, PathResults& path, const RunConfig& cfg, double epsilon,
                  const std::string& name) {
  std::array<const MacroSolution*, 3> approx{};
  for (int o = 0; o < 3; ++o) approx[o] = &*path.recon[o];
  path.report = compare(name, approx, *out.reference);
  static const char* fields[] = {"T", "c", "u"};
  for (int o = 0; o < 3; ++o)
    for (int f = 0; f < 3; ++f)
      path.residuals[std::string(fields[f]) + "_" + order_name(static_cast<Order>(o))] = residual_diagnostic(
          *out.fine_mesh, cfg.model, epsilon, *path.recon[o], static_cast<FieldKind>(f), cfg.sources, cfg.bcs);
}

}  // namespace

ExperimentOutputs run_experiment(const RunConfig& cfg, double epsilon, const std::set<std::string>& stages) {
  for (const auto& s : stages)
    if (std::find(known_stages().begin(), known_stages().end(), s) == known_stages().end())
      throw std::invalid_argument("unknown stage '" + s + "'");
  ExperimentOutputs out;
  out.epsilon = epsilon;
  const bool want_compare = has(stages, "compare");
  const bool want_recon = want_compare || has(stages, "reconstruct");
  const bool want_macro = want_recon || has(stages, "macro");
  const bool want_cells = want_macro || has(stages, "cell") || has(stages, "homogenize");
  const bool want_reference = want_compare || has(stages, "reference");
  const bool general = cfg.path != "separated";
  const bool separated = cfg.path != "general";
  if (separated && !is_separable(cfg.model))
    throw std::invalid_argument("path '" + cfg.path + "' needs a separable (product mode) model");

  out.cell = std::make_shared<const UnitCellMesh>(build_unit_cell_mesh(cfg.cell_divisions, cfg.model.geometry.inclusion));
  const RepresentativeGrid grid = build_representative_grid(cfg.domain, cfg.n_rep);
  const CellCache cache(cache_root(cfg));

  if (want_cells) {
    const auto t0 = Clock::now();
    const bool compute = has(stages, "cell");
    // the general reconstruction needs second-order sets; homogenize alone does not
    const bool second = want_recon || compute;
    if (general) {
      if (compute) {
        out.offline = run_offline(out.cell, cfg.model, grid, cfg.threads, &cache, second);
      } else {
        out.offline = load_offline(out.cell, cfg.model, grid, cache, true);
        if (!out.offline && !second) out.offline = load_offline(out.cell, cfg.model, grid, cache, false);
        if (!out.offline)
          throw CacheError("no cell cache for this model/cell mesh/grid under " + cache.root() +
                           "; run the 'cell' stage first");
      }
      out.offline_computed |= !out.offline->from_cache;
    }
    if (separated) {
      if (compute) {
        out.separated_offline = run_offline_separated(out.cell, cfg.model, grid, &cache);
      } else {
        out.separated_offline = load_offline_separated(out.cell, cfg.model, grid, cache);
        if (!out.separated_offline)
          throw CacheError("no separated cell cache under " + cache.root() + "; run the 'cell' stage first");
      }
      out.offline_computed |= !out.separated_offline->from_cache;
    }
    const int points = general ? grid.size() : 1;
    out.timings.push_back({out.offline_computed ? "cell" : "cell(cached)", out.cell->num_nodes(),
                           out.cell->num_elements(), out.offline_computed ? points : 0, since(t0)});
  }

  if (want_macro) out.macro_mesh = std::make_shared<const Mesh>(build_macro_mesh(cfg.domain, cfg.macro_divisions, cfg.tagging));
  if (want_recon || want_reference)
    out.fine_mesh = std::make_shared<const Mesh>(
        build_fine_mesh(cfg.domain, epsilon, cfg.fine_per_cell, cfg.model.geometry, cfg.tagging));

  if (want_macro && general)
    run_path(out, out.general, out.offline->homog, cfg, epsilon, want_recon,
             [&](const ReconstructionInputs& in) { return reconstruct(in, out.offline->sets); }, out.timings, "");
  if (want_macro && separated)
    run_path(out, out.separated, out.separated_offline->homog, cfg, epsilon, want_recon,
             [&](const ReconstructionInputs& in) { return reconstruct_separated(in, out.separated_offline->data); },
             out.timings, "(separated)");

  if (want_reference) {
    const auto t0 = Clock::now();
    out.reference = solve_reference(out.fine_mesh, cfg.model, epsilon, cfg.sources, cfg.bcs);
    out.timings.push_back({"reference", out.fine_mesh->num_nodes(), out.fine_mesh->num_elements(), 3, since(t0)});
  }

  if (want_compare) {
    const auto t0 = Clock::now();
    if (general) compare_path(out, out.general, cfg, epsilon, cfg.name);
    if (separated) compare_path(out, out.separated, cfg, epsilon, cfg.name + "_separated");
    out.timings.push_back({"compare", out.fine_mesh->num_nodes(), out.fine_mesh->num_elements(), 0, since(t0)});
  }
  return out;
}

namespace {

std::vector<PointField> solution_fields(const MacroSolution& s, const std::string& suffix) {
  auto field = [](const std::string& name, const FieldSolution& f) {
    return PointField{name, f.components, std::vector<double>(f.values.data(), f.values.data() + f.values.size())};
  };
  return {field("T" + suffix, s.T), field("c" + suffix, s.c), field("u" + suffix, s.u)};
}

void write_residuals(const std::string& path, const ExperimentOutputs& out) {
  std::ofstream f(path);
  f.precision(10);
  f << "path,field,homogenized,loms,homs\n";
  for (const auto* p : {&out.general, &out.separated}) {
    if (p->residuals.empty()) continue;
    for (const char* field : {"T", "c", "u"}) {
      f << (p == &out.general ? "general" : "separated") << ',' << field;
      for (int o = 0; o < 3; ++o) f << ',' << p->residuals.at(std::string(field) + "_" + order_name(static_cast<Order>(o)));
      f << '\n';
    }
  }
}

}  // namespace

void write_outputs(const RunConfig& cfg, const ExperimentOutputs& out, const std::set<std::string>& stages,
                   const std::string& dir) {
  // a cell-only run leaves nothing but the cache behind
  if (stages.size() == 1 && has(stages, "cell")) return;
  fs::create_directories(dir);
  const fs::path d(dir);
  nlohmann::json files = nlohmann::json::array();
  auto add = [&](const std::string& name) {
    files.push_back(name);
    return (d / name).string();
  };

  if (has(stages, "homogenize")) {
    if (out.offline) write_homogenized_csv(add("homogenized.csv"), out.offline->homog);
    if (out.separated_offline) write_homogenized_csv(add("homogenized_separated.csv"), out.separated_offline->homog);
  }

  if (cfg.vtk) {
    if (out.general.macro) write_vtk(add("macro.vtk"), *out.macro_mesh, solution_fields(*out.general.macro, ""));
    if (out.separated.macro)
      write_vtk(add("macro_separated.vtk"), *out.macro_mesh, solution_fields(*out.separated.macro, ""));
    std::vector<PointField> fine;
    if (out.reference) fine = solution_fields(*out.reference, "_reference");
    for (const auto* p : {&out.general, &out.separated})
      for (int o = 0; o < 3; ++o) {
        if (!p->recon[o]) continue;
        std::string suffix = std::string("_") + order_name(static_cast<Order>(o));
        if (p == &out.separated) suffix += "_separated";
        for (auto& f : solution_fields(*p->recon[o], suffix)) fine.push_back(std::move(f));
      }
    if (!fine.empty()) write_vtk(add("fine.vtk"), *out.fine_mesh, fine);
  }

  std::vector<ErrorReport> reports;
  for (const auto* p : {&out.general, &out.separated})
    if (p->report) reports.push_back(*p->report);
  if (!reports.empty()) {
    write_error_csv(add("errors.csv"), reports);
    write_residuals(add("residuals.csv"), out);
  }

  {
    // wall times vary between runs; the other CSV files are deterministic
    std::ofstream t(add("timing.csv"));
    t.precision(6);
    t << "stage,nodes,elements,solves,seconds\n";
    for (const auto& row : out.timings)
      t << row.stage << ',' << row.nodes << ',' << row.elements << ',' << row.solves << ',' << row.seconds << '\n';
  }

  nlohmann::json m;
  m["name"] = cfg.name;
  m["epsilon"] = out.epsilon;
  m["stages"] = std::vector<std::string>(stages.begin(), stages.end());
  m["hashes"]["model"] = hex64(cfg.model.hash());
  m["hashes"]["cell_mesh"] = hex64(out.cell->hash());
  if (out.offline) m["hashes"]["cell_cache"] = hex64(out.offline->key);
  if (out.separated_offline) m["hashes"]["separated_cache"] = hex64(out.separated_offline->key);
  if (out.macro_mesh) m["hashes"]["macro_mesh"] = hex64(out.macro_mesh->hash());
  if (out.fine_mesh) m["hashes"]["fine_mesh"] = hex64(out.fine_mesh->hash());
  m["offline_computed"] = out.offline_computed;
  files.push_back("manifest.json");
  m["files"] = files;
  m["config"] = cfg.normalized;
  std::ofstream(d / "manifest.json") << m.dump(2) << '\n';
}

ConvergenceResult run_convergence(const RunConfig& cfg, const std::vector<double>& eps_list, double fine_spacing) {
  if (eps_list.size() < 2) throw std::invalid_argument("convergence needs at least two eps values");
  ConvergenceResult r;
  for (double eps : eps_list) {
    RunConfig c = cfg;
    if (fine_spacing > 0) {
      const double per = eps / fine_spacing;
      c.fine_per_cell = static_cast<int>(std::lround(per));
      if (std::abs(per - c.fine_per_cell) > 1e-9 * per)
        throw std::invalid_argument("fine_spacing does not divide eps = " + std::to_string(eps));
    }
    const ExperimentOutputs out = run_experiment(c, eps, {"cell", "compare"});
    const PathResults& p = c.path == "separated" ? out.separated : out.general;
    r.rows.push_back({eps, out.fine_mesh->num_nodes(), *p.report});
  }
  static const char* fields[] = {"T", "c", "u"};
  for (int f = 0; f < 3; ++f)
    for (int o = 0; o < 3; ++o) {
      std::vector<std::pair<double, double>> pts;
      for (const auto& row : r.rows) pts.emplace_back(row.epsilon, row.report.get(static_cast<FieldKind>(f), Norm::H1semi, o));
      r.rates[std::string(fields[f]) + "_" + order_name(static_cast<Order>(o))] = fit_convergence_rate(pts);
    }
  return r;
}

void write_convergence_csv(const std::string& path, const ConvergenceResult& r) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  f.precision(10);
  const auto cols = ErrorReport::columns();
  f << "epsilon,fine_nodes";
  for (const auto& c : cols) f << ',' << c;
  f << '\n';
  for (const auto& row : r.rows) {
    f << row.epsilon << ',' << row.fine_nodes;
    for (const auto& c : cols) f << ',' << row.report.errors.at(c);
    f << '\n';
  }
  f << "\nfield_order,h1_rate\n";
  for (const auto& [k, v] : r.rates) f << k << ',' << v << '\n';
}

}  // namespace homs
