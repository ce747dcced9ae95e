// Acceptance runner: one [PASS]/[FAIL] line per criterion, details indented.
// Usage: acceptance [criterion numbers...]   (default: all)

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "homs/pipeline.hpp"
#include "homs/reference.hpp"

using namespace homs;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = true;
  std::vector<std::string> lines;

  template <class... A>
  void note(A&&... a) {
    std::ostringstream os;
    os.precision(6);
    (os << ... << a);
    lines.push_back(os.str());
  }
  // records a check; the detail line is marked when it fails
  template <class... A>
  bool check(bool cond, A&&... a) {
    std::ostringstream os;
    os.precision(6);
    (os << ... << a);
    lines.push_back((cond ? "ok   " : "FAIL ") + os.str());
    ok = ok && cond;
    return cond;
  }
};

const fs::path kScratch = fs::temp_directory_path() / "homs_acceptance";

int thread_count() { return std::max(1u, std::min(4u, std::thread::hardware_concurrency())); }

RunConfig example_config(const char* file, const std::string& tag) {
  RunConfig cfg = load_config(std::string(HOMS_SOURCE_DIR) + "/configs/" + file);
  cfg.cache_dir = (kScratch / ("cache_" + tag)).string();
  cfg.out_dir = (kScratch / ("out_" + tag)).string();
  cfg.threads = thread_count();
  return cfg;
}

const std::set<std::string> kAllStages{"cell", "homogenize", "macro", "reconstruct", "reference", "compare"};

// Example-1 runs are shared between criteria.
const ExperimentOutputs& product_run() {
  static const ExperimentOutputs out = [] {
    RunConfig cfg = example_config("example1_product.json", "product");
    cfg.path = "both";
    return run_experiment(cfg, cfg.epsilon, kAllStages);
  }();
  return out;
}

const ExperimentOutputs& sum_run() {
  static const ExperimentOutputs out = [] {
    RunConfig cfg = example_config("example1_sum.json", "sum");
    return run_experiment(cfg, cfg.epsilon, kAllStages);
  }();
  return out;
}

const char* kField[] = {"T", "c", "u"};

void trend(Outcome& r, const ErrorReport& rep, const double published[3][3]) {
  double h[3][3];
  for (int f = 0; f < 3; ++f)
    for (int o = 0; o < 3; ++o) h[f][o] = rep.get(static_cast<FieldKind>(f), Norm::H1semi, o);
  for (int f = 0; f < 3; ++f)
    r.note(kField[f], " H1 errors (order 0/1/2): ", h[f][0], " / ", h[f][1], " / ", h[f][2], "   published ",
           published[f][0], " / ", published[f][1], " / ", published[f][2]);
  for (int f = 0; f < 2; ++f) {
    r.check(h[f][2] < 0.2, kField[f], "errorH12 < 0.2");
    r.check(h[f][2] < h[f][1] / 4, kField[f], "errorH12 < ", kField[f], "errorH11 / 4");
    r.check(h[f][2] < h[f][0] / 4, kField[f], "errorH12 < ", kField[f], "errorH10 / 4");
  }
  r.check(h[2][2] <= h[2][1] && h[2][1] <= h[2][0], "uerrorH12 <= uerrorH11 <= uerrorH10");
  for (int f = 0; f < 3; ++f)
    for (int o = 0; o < 3; ++o) {
      const double rel = std::abs(h[f][o] - published[f][o]) / published[f][o];
      r.check(rel <= 0.5, kField[f], "errorH1", o, " within 50% of published (", rel * 100, "%)");
    }
}

// ---------------------------------------------------------------- criteria

Outcome c1_product_trend() {
  static const double published_product[3][3] = {
      {0.86663, 0.82266, 0.08441}, {0.69682, 0.59505, 0.08720}, {0.77757, 0.19190, 0.19162}};
  Outcome r;
  trend(r, *product_run().general.report, published_product);
  return r;
}

Outcome c2_sum_trend() {
  static const double published_sum[3][3] = {
      {0.85758, 0.81063, 0.06621}, {0.68460, 0.57755, 0.07891}, {0.72242, 0.21628, 0.20540}};
  Outcome r;
  trend(r, *sum_run().general.report, published_sum);
  return r;
}

Outcome c3_constant_identities() {
  Outcome r;
  PhaseProperties p;
  p.E = 5;
  p.nu = 0.3;
  p.k = 2;
  p.g = 0.5;
  p.alpha = 0.1;
  p.beta = 0.05;
  MaterialModel m = constant_model(p);
  m.geometry.inclusion = Circle{};  // tagged, but both phases are identical
  auto cell = std::make_shared<const UnitCellMesh>(build_unit_cell_mesh(10, m.geometry.inclusion));
  const RepresentativeGrid grid = build_representative_grid(Box{}, {3, 3});
  const OfflineResult off = run_offline(cell, m, grid, thread_count(), nullptr);

  double fam = 0, tens = 0;
  for (int i = 0; i < grid.size(); ++i) {
    fam = std::max({fam, off.sets.first[i].data.cwiseAbs().maxCoeff(), off.sets.second[i].data.cwiseAbs().maxCoeff()});
    const CoefficientBundle b = evaluate_phase(m, grid.point(i), Phase::Matrix);
    const HomogenizedTensors& h = off.homog.values[i];
    tens = std::max({tens, (h.k - b.k).norm() / b.k.norm(), (h.g - b.g).norm() / b.g.norm(),
                     (h.D - b.D).norm() / b.D.norm(), (h.A - b.thermal_stress()).norm() / b.thermal_stress().norm(),
                     (h.B - b.moisture_stress()).norm() / b.moisture_stress().norm()});
  }
  r.check(fam <= 1e-10, "max |cell function| over 15 families and ", grid.size(), " points = ", fam);
  r.check(tens <= 1e-10, "max relative tensor identity defect = ", tens);

  // macro problem on the fine mesh itself, so no interpolation enters
  const double eps = 0.25;
  auto fine = std::make_shared<const Mesh>(build_fine_mesh(Box{}, eps, 10, m.geometry, BoundaryTagging{}));
  Sources src;
  src.h = Expression(50.0);
  src.m = Expression(50.0);
  src.f = {Expression(100.0), Expression(100.0)};
  BoundaryData bc;
  bc.T = Expression(1.0);
  MacroSolution hom = solve_homogenized(fine, off.homog, src, bc);
  prepare_macro_derivatives(hom);
  const MacroSolution ref = solve_reference(fine, m, eps, src, bc);
  double worst = 0;
  for (int o = 0; o < 3; ++o) {
    const MacroSolution rec = reconstruct({eps, fine, &hom, static_cast<Order>(o)}, off.sets);
    for (int f = 0; f < 3; ++f) {
      const FieldSolution& a = f == 0 ? rec.T : f == 1 ? rec.c : rec.u;
      const FieldSolution& b = f == 0 ? ref.T : f == 1 ? ref.c : ref.u;
      worst = std::max(worst, (a.values - b.values).cwiseAbs().maxCoeff() / b.values.cwiseAbs().maxCoeff());
    }
  }
  r.check(worst <= 1e-9, "homogenized/LOMS/HOMS vs reference, max relative nodal difference = ", worst);
  return r;
}

Outcome c4_tensor_invariants() {
  Outcome r;
  const ExperimentOutputs& out = product_run();
  const HomogenizedField& field = out.offline->homog;
  const MaterialModel model = load_config(std::string(HOMS_SOURCE_DIR) + "/configs/example1_product.json").model;
  double sym = 0, dsym = 0, eig_k = 1e300, eig_g = 1e300, eig_d = 1e300, loewner = -1e300;
  for (int i = 0; i < field.grid.size(); ++i) {
    const HomogenizedTensors& h = field.values[i];
    sym = std::max({sym, symmetry_defect(h.k), symmetry_defect(h.g), symmetry_defect(h.A), symmetry_defect(h.B)});
    dsym = std::max(dsym, symmetry_defect(h.D));
    eig_k = std::min(eig_k, Eigen::SelfAdjointEigenSolver<Mat2>(h.k).eigenvalues().minCoeff());
    eig_g = std::min(eig_g, Eigen::SelfAdjointEigenSolver<Mat2>(h.g).eigenvalues().minCoeff());
    eig_d = std::min(eig_d, Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(voigt(h.D)).eigenvalues().minCoeff());
    const CellCoefficients cc = cell_coefficients(*out.cell, model, field.grid.point(i));
    Mat2 mean = Mat2::Zero();
    for (int e = 0; e < out.cell->num_elements(); ++e) mean += out.cell->area(e) * cc.k[e];
    const double top = Eigen::SelfAdjointEigenSolver<Mat2>(h.k - mean).eigenvalues().maxCoeff();
    loewner = std::max(loewner, top);
  }
  r.note(field.grid.size(), " representative points");
  r.check(sym <= 1e-10, "max symmetry defect of k, g, A, B = ", sym);
  r.check(dsym <= 1e-10, "max minor/major symmetry defect of D = ", dsym);
  r.check(eig_k > 0 && eig_g > 0 && eig_d > 0, "min eigenvalues k ", eig_k, ", g ", eig_g, ", Voigt(D) ", eig_d);
  r.check(loewner <= 1e-8, "max eigenvalue of k_hat - <k> = ", loewner);
  return r;
}

Outcome c5_separated_consistency() {
  Outcome r;
  const ExperimentOutputs& out = product_run();
  const SeparatedOffline& sep = *out.separated_offline;
  const HomogenizedField& gen = out.offline->homog;
  double tens = 0;
  for (int i = 0; i < gen.grid.size(); ++i) {
    const double w = sep.data.omega.value(gen.grid.point(i));
    const HomogenizedTensors& h = gen.values[i];
    const HomogenizedTensors& s = sep.star_hom;
    tens = std::max({tens, (h.k - w * s.k).norm() / h.k.norm(), (h.g - w * s.g).norm() / h.g.norm(),
                     (h.D - w * s.D).norm() / h.D.norm(), (h.A - w * w * s.A).norm() / h.A.norm(),
                     (h.B - w * w * s.B).norm() / h.B.norm()});
  }
  r.check(tens <= 1e-10, "general tensors vs omega(x_I)*star (omega^2 for A, B): max relative defect ", tens);
  const MacroSolution& g = *out.general.recon[2];
  const MacroSolution& p = *out.separated.recon[2];
  r.check(relative_error(p.T, g.T, Norm::L2) <= 1e-6, "HOMS T separated vs general, relative L2 ",
          relative_error(p.T, g.T, Norm::L2));
  r.check(relative_error(p.c, g.c, Norm::L2) <= 1e-6, "HOMS c separated vs general, relative L2 ",
          relative_error(p.c, g.c, Norm::L2));
  r.check(relative_error(p.u, g.u, Norm::L2) <= 1e-6, "HOMS u separated vs general, relative L2 ",
          relative_error(p.u, g.u, Norm::L2));
  r.note("separated HOMS vs reference, H1: T ", out.separated.report->get(FieldKind::T, Norm::H1semi, 2), "  c ",
         out.separated.report->get(FieldKind::c, Norm::H1semi, 2), "  u ",
         out.separated.report->get(FieldKind::u, Norm::H1semi, 2));
  return r;
}

Outcome c6_convergence() {
  Outcome r;
  RunConfig cfg = example_config("example1_product.json", "product");
  cfg.cell_divisions = 20;
  cfg.fine_per_cell = 20;
  const std::vector<double> eps{0.25, 0.125, 0.0625};
  const ConvergenceResult c = run_convergence(cfg, eps, 0.0);
  for (const auto& row : c.rows)
    r.note("eps ", row.epsilon, " (", row.fine_nodes, " fine nodes): T H1 errors ",
           row.report.get(FieldKind::T, Norm::H1semi, 0), " / ", row.report.get(FieldKind::T, Norm::H1semi, 1), " / ",
           row.report.get(FieldKind::T, Norm::H1semi, 2));
  const double homs = c.rates.at("T_homs"), hom = c.rates.at("T_homogenized");
  r.check(homs >= 0.8, "slope of HOMS T H1 error = ", homs);
  r.check(hom < homs, "slope of homogenized T H1 error = ", hom, " < HOMS slope");
  // informational: one absolute fine spacing for all eps (80, 40, 20 elements per cell)
  const ConvergenceResult h = run_convergence(cfg, eps, 1.0 / 320);
  for (const auto& row : h.rows)
    r.note("fixed h = 1/320, eps ", row.epsilon, ": T H1 errors ", row.report.get(FieldKind::T, Norm::H1semi, 0),
           " / ", row.report.get(FieldKind::T, Norm::H1semi, 2));
  r.note("fixed h = 1/320 slopes: HOMS ", h.rates.at("T_homs"), ", homogenized ", h.rates.at("T_homogenized"),
         " (not asserted: the cell mesh no longer matches the fine mesh inside each cell)");
  return r;
}

Outcome c7_residuals() {
  Outcome r;
  // first verified run; the bound allows 0.1% drift either way
  static const std::map<std::string, double> frozen = {
      {"T_homogenized", 11.0969711}, {"T_loms", 4.13353385}, {"T_homs", 4.07831827},
      {"c_homogenized", 10.8975931}, {"c_loms", 4.05181215}, {"c_homs", 3.99937477},
      {"u_homogenized", 0.924138444}, {"u_loms", 0.227525246}, {"u_homs", 0.226650674}};
  const auto& res = product_run().general.residuals;
  for (const char* f : {"T", "c", "u"}) {
    const std::string s(f);
    const double h0 = res.at(s + "_homogenized"), h1 = res.at(s + "_loms"), h2 = res.at(s + "_homs");
    r.check(h2 < h1 && h1 < h0, f, " residual HOMS ", h2, " < LOMS ", h1, " < homogenized ", h0);
    for (const char* o : {"_homogenized", "_loms", "_homs"}) {
      const double v = res.at(s + o), ref = frozen.at(s + o);
      r.check(std::abs(v - ref) <= 1e-3 * ref, s + o, " = ", std::setprecision(9), v, " vs frozen ", ref);
    }
  }
  return r;
}

// dense Gaussian elimination with identity rows for the constraints
Vec dense_solve(const SparseSystem& s) {
  Eigen::MatrixXd A = Eigen::MatrixXd(s.A);
  Vec b = s.b;
  for (const auto& [d, v] : s.constraints) {
    A.row(d).setZero();
    A(d, d) = 1.0;
    b[d] = v;
  }
  const int n = static_cast<int>(b.size());
  for (int c = 0; c < n; ++c) {
    int p = c;
    for (int k = c + 1; k < n; ++k)
      if (std::abs(A(k, c)) > std::abs(A(p, c))) p = k;
    A.row(c).swap(A.row(p));
    std::swap(b[c], b[p]);
    for (int k = c + 1; k < n; ++k) {
      const double f = A(k, c) / A(c, c);
      A.row(k) -= f * A.row(c);
      b[k] -= f * b[c];
    }
  }
  Vec x(n);
  for (int k = n - 1; k >= 0; --k) x[k] = (b[k] - A.row(k).tail(n - k - 1).dot(x.tail(n - k - 1))) / A(k, k);
  return x;
}

Outcome c8_fem_oracles() {
  Outcome r;
  Mesh tri;
  tri.nodes = {{0, 0}, {1, 0}, {0, 1}};
  tri.elements = {{0, 1, 2}};
  tri.phases = {Phase::Matrix};
  Eigen::Matrix3d hand;
  hand << 1.0, -0.5, -0.5, -0.5, 0.5, 0.0, -0.5, 0.0, 0.5;
  r.check(scalar_element_matrix(tri, 0, Mat2::Identity()) == hand, "unit right triangle stiffness equals hand matrix");

  // patch test: linear T, c, u with constant coefficients and matching body force
  auto mesh = std::make_shared<const Mesh>(build_macro_mesh(Box{}, {7, 6}, BoundaryTagging{}));
  CoupledCoefficients cc;
  const auto ne = mesh->elements.size();
  const double a = 0.7, b = 0.3;
  cc.k.assign(ne, 2.0 * Mat2::Identity());
  cc.g.assign(ne, 0.5 * Mat2::Identity());
  cc.D.assign(ne, plane_strain(4.0, 0.3));
  cc.A.assign(ne, a * Mat2::Identity());
  cc.B.assign(ne, b * Mat2::Identity());
  Sources src;
  src.f = {Expression(a * 1.0 - b * 1.0), Expression(a * 2.0 + b * 0.5)};
  BoundaryData bc;
  bc.T = Expression::parse("1 + x1 + 2*x2");
  bc.c = Expression::parse("0.2 - x1 + 0.5*x2");
  bc.u = {Expression::parse("0.01*x1 - 0.02*x2"), Expression::parse("0.03 + 0.015*x1")};
  const MacroSolution s = solve_coupled(mesh, cc, src, bc);
  double patch = 0;
  for (int v = 0; v < mesh->num_nodes(); ++v) {
    const auto& x = mesh->nodes[v];
    patch = std::max({patch, std::abs(s.T.value(v) - bc.T.value(x)), std::abs(s.c.value(v) - bc.c.value(x)),
                      std::abs(s.u.value(v, 0) - bc.u[0].value(x)), std::abs(s.u.value(v, 1) - bc.u[1].value(x))});
  }
  r.check(patch <= 1e-10, "coupled patch test, max nodal error ", patch);

  std::mt19937 rng(7);
  std::uniform_real_distribution<double> U(0.5, 2.0);
  const Mesh m6 = build_macro_mesh(Box{}, {6, 6}, BoundaryTagging{});  // 49 nodes
  std::vector<Mat2> k(m6.elements.size());
  for (auto& ke : k) {
    const double d = U(rng), o = 0.2 * (U(rng) - 1.25);
    ke << d, o, o, d + 0.5;
  }
  SparseSystem sys;
  sys.A = assemble_scalar(m6, k);
  sys.b = Vec::NullaryExpr(m6.num_nodes(), [&] { return U(rng); });
  sys.constraints = dirichlet_constraints(m6, kGammaT, 1, [](const Eigen::Vector2d& x) {
    return Eigen::VectorXd::Constant(1, x.x() - x.y());
  });
  const double d1 = (solve_spd(sys) - dense_solve(sys)).cwiseAbs().maxCoeff();
  r.check(d1 <= 1e-8, "solve_spd vs dense oracle, 49 scalar dofs: ", d1);

  const Mesh m4 = build_macro_mesh(Box{}, {4, 4}, BoundaryTagging{});  // 50 dofs
  SparseSystem el;
  el.components = 2;
  el.A = assemble_elasticity(m4, std::vector<Tensor4>(m4.elements.size(), plane_strain(3.0, 0.25)));
  el.b = Vec::NullaryExpr(2 * m4.num_nodes(), [&] { return U(rng) - 1.25; });
  el.constraints = dirichlet_constraints(m4, kGammaU, 2, [](const Eigen::Vector2d& x) {
    return Eigen::Vector2d(0.1 * x.y(), -0.05 * x.x());
  });
  const double d2 = (solve_spd(el) - dense_solve(el)).cwiseAbs().maxCoeff();
  r.check(d2 <= 1e-8, "solve_spd vs dense oracle, 50 elasticity dofs: ", d2);
  return r;
}

Outcome c9_timing() {
  Outcome r;
  RunConfig cfg = example_config("example1_product.json", "product");
  cfg.path = "both";
  const ExperimentOutputs& first = product_run();
  const fs::path dir = kScratch / "out_product";
  write_outputs(cfg, first, kAllStages, dir.string());
  std::ifstream t(dir / "timing.csv");
  std::string line;
  std::getline(t, line);
  r.check(line == "stage,nodes,elements,solves,seconds", "timing.csv header: ", line);
  int rows = 0;
  bool sane = true;
  while (std::getline(t, line)) {
    r.note("  ", line);
    int nodes = 0, elements = 0;
    double secs = -1;
    std::string stage;
    std::istringstream ls(line);
    std::getline(ls, stage, ',');
    char comma;
    int solves;
    ls >> nodes >> comma >> elements >> comma >> solves >> comma >> secs;
    sane = sane && nodes > 0 && elements > 0 && secs >= 0;
    ++rows;
  }
  r.check(rows >= 6 && sane, rows, " stage rows with nodes, elements and wall time");

  const ExperimentOutputs second = run_experiment(cfg, 1.0 / 20, {"cell", "homogenize", "macro"});
  const bool cached = std::any_of(second.timings.begin(), second.timings.end(),
                                  [](const StageTiming& s) { return s.stage == "cell(cached)"; });
  r.check(!second.offline_computed && cached, "second eps = 1/20 reused the warm cell cache (offline_computed = ",
          second.offline_computed ? "true" : "false", ")");
  for (const auto& s : second.timings) r.note("  eps 1/20: ", s.stage, " ", s.seconds, " s");
  return r;
}

struct Criterion {
  int id;
  const char* title;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "Example-1 product model: error ordering and magnitudes", c1_product_trend},
      {2, "scale-coupled sum model: error ordering and magnitudes", c2_sum_trend},
      {3, "constant coefficients: vanishing correctors and exact identities", c3_constant_identities},
      {4, "homogenized tensor symmetry, positivity and Voigt bound", c4_tensor_invariants},
      {5, "separated path matches the general path", c5_separated_consistency},
      {6, "HOMS convergence rate in eps", c6_convergence},
      {7, "fine-scale residual ordering", c7_residuals},
      {8, "FEM kernel oracles", c8_fem_oracles},
      {9, "timing report and warm cell cache", c9_timing},
  };
  std::set<int> pick;
  for (int i = 1; i < argc; ++i) pick.insert(std::atoi(argv[i]));
  fs::remove_all(kScratch);
  int failed = 0, ran = 0;
  for (const auto& c : all) {
    if (!pick.empty() && !pick.count(c.id)) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.ok = false;
      o.lines.push_back(std::string("exception: ") + e.what());
    }
    failed += !o.ok;
    ++ran;
    std::cout << (o.ok ? "[PASS] " : "[FAIL] ") << c.id << ". " << c.title << '\n';
    for (const auto& l : o.lines) std::cout << "         " << l << '\n';
    std::cout.flush();
  }
  std::cout << (ran - failed) << " of " << ran << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
