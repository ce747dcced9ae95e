#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "homs/metrics.hpp"
#include "homs/reference.hpp"

using namespace homs;
namespace fs = std::filesystem;

namespace {

FieldSolution nodal(std::shared_ptr<const Mesh> m, const std::function<double(const Eigen::Vector2d&)>& f) {
  Vec v(m->num_nodes());
  for (int i = 0; i < m->num_nodes(); ++i) v[i] = f(m->nodes[i]);
  return make_field(m, 1, v);
}

}  // namespace

TEST_CASE("relative errors against hand values") {
  auto m = std::make_shared<const Mesh>(build_macro_mesh(Box{{0, 0}, {2, 1}}, {6, 3}, BoundaryTagging{}));
  const auto one = nodal(m, [](const Eigen::Vector2d&) { return 1.0; });
  const auto shifted = nodal(m, [](const Eigen::Vector2d&) { return 1.1; });
  CHECK(relative_error(shifted, one, Norm::L2) == doctest::Approx(0.1));
  CHECK(field_norm(one, Norm::L2) == doctest::Approx(std::sqrt(2.0)));
  const auto x = nodal(m, [](const Eigen::Vector2d& p) { return p.x(); });
  const auto twox = nodal(m, [](const Eigen::Vector2d& p) { return 2 * p.x() + 5; });
  CHECK(relative_error(twox, x, Norm::H1semi) == doctest::Approx(1.0));
  // |∇(x + 3y)|² = 10 over an area of 2
  const auto xy = nodal(m, [](const Eigen::Vector2d& p) { return p.x() + 3 * p.y(); });
  CHECK(field_norm(xy, Norm::H1semi) == doctest::Approx(std::sqrt(20.0)));
  CHECK(error_norm(x, x, Norm::H1semi) == 0.0);
  const auto zero = nodal(m, [](const Eigen::Vector2d&) { return 0.0; });
  CHECK_THROWS_AS(relative_error(one, zero, Norm::L2), std::domain_error);
  auto m2 = std::make_shared<const Mesh>(build_macro_mesh(Box{}, {2, 2}, BoundaryTagging{}));
  CHECK_THROWS_AS(relative_error(nodal(m2, [](const Eigen::Vector2d&) { return 1.0; }), one, Norm::L2),
                  std::invalid_argument);
}

TEST_CASE("vector fields sum both components") {
  auto m = std::make_shared<const Mesh>(build_macro_mesh(Box{}, {4, 4}, BoundaryTagging{}));
  Vec v(2 * m->num_nodes());
  for (int i = 0; i < m->num_nodes(); ++i) {
    v[2 * i] = m->nodes[i].x();
    v[2 * i + 1] = 2 * m->nodes[i].y();
  }
  CHECK(field_norm(make_field(m, 2, v), Norm::H1semi) == doctest::Approx(std::sqrt(5.0)));
}

TEST_CASE("convergence rate fit") {
  std::vector<std::pair<double, double>> pts;
  for (double e : {0.25, 0.125, 0.0625}) pts.emplace_back(e, 3.0 * e * e);
  CHECK(fit_convergence_rate(pts) == doctest::Approx(2.0));
  // least squares through noisy data: slope of log(err) = 1 + noise
  pts = {{0.5, 0.5 * 1.1}, {0.25, 0.25 / 1.1}, {0.125, 0.125 * 1.1}};
  const double lx[3] = {std::log(0.5), std::log(0.25), std::log(0.125)};
  const double ly[3] = {std::log(0.55), std::log(0.25 / 1.1), std::log(0.1375)};
  const double mx = (lx[0] + lx[1] + lx[2]) / 3, my = (ly[0] + ly[1] + ly[2]) / 3;
  double sxy = 0, sxx = 0;
  for (int i = 0; i < 3; ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  CHECK(fit_convergence_rate(pts) == doctest::Approx(sxy / sxx));
  CHECK_THROWS(fit_convergence_rate({{0.1, 1.0}}));
  CHECK_THROWS(fit_convergence_rate({{0.1, 1.0}, {0.1, 2.0}}));
  CHECK_THROWS(fit_convergence_rate({{0.1, 0.0}, {0.2, 2.0}}));
}

TEST_CASE("report keys and CSV layout") {
  CHECK(ErrorReport::key(FieldKind::T, Norm::L2, 0) == "TerrorL20");
  CHECK(ErrorReport::key(FieldKind::u, Norm::H1semi, 2) == "uerrorH12");
  const auto cols = ErrorReport::columns();
  REQUIRE(cols.size() == 18);
  CHECK(cols.front() == "TerrorL20");
  CHECK(cols.back() == "uerrorH12");

  ErrorReport r;
  r.experiment = "ex";
  r.errors["TerrorH12"] = 0.25;
  const fs::path p = fs::temp_directory_path() / "homs_test_errors.csv";
  write_error_csv(p.string(), {r});
  std::ifstream in(p);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header.rfind("experiment,TerrorL20,TerrorL21", 0) == 0);
  CHECK(row.rfind("ex,", 0) == 0);
  CHECK(row.find("0.25") != std::string::npos);
  fs::remove(p);
}

TEST_CASE("compare fills every key for the supplied orders") {
  auto m = std::make_shared<const Mesh>(build_macro_mesh(Box{}, {3, 3}, BoundaryTagging{}));
  MacroSolution ref, a;
  ref.T = ref.c = nodal(m, [](const Eigen::Vector2d& p) { return 1 + p.x(); });
  Vec u(2 * m->num_nodes());
  for (int i = 0; i < m->num_nodes(); ++i) u.segment<2>(2 * i) = m->nodes[i];
  ref.u = make_field(m, 2, u);
  a = ref;
  a.T.values *= 1.5;
  const ErrorReport r = compare("x", {&a, nullptr, &ref}, ref);
  CHECK(r.errors.size() == 12);
  CHECK(r.get(FieldKind::T, Norm::H1semi, 0) == doctest::Approx(0.5));
  CHECK(r.get(FieldKind::u, Norm::L2, 2) == 0.0);
  CHECK_THROWS(r.get(FieldKind::T, Norm::L2, 1));
}

TEST_CASE("fine residual vanishes for the direct solution") {
  const MaterialModel model = example1_model();
  const double eps = 0.25;
  auto fine = std::make_shared<const Mesh>(build_fine_mesh(Box{}, eps, 8, model.geometry, BoundaryTagging{}));
  Sources src;
  src.h = Expression(500.0);
  src.m = Expression(500.0);
  src.f = {Expression(1000.0), Expression(1000.0)};
  BoundaryData bc;
  bc.T = Expression(273.15);
  const MacroSolution ref = solve_reference(fine, model, eps, src, bc);
  for (FieldKind k : {FieldKind::T, FieldKind::c, FieldKind::u})
    CHECK(residual_diagnostic(*fine, model, eps, ref, k, src, bc) < 1e-9);
  MacroSolution perturbed = ref;
  perturbed.T.values *= 1.001;
  CHECK(residual_diagnostic(*fine, model, eps, perturbed, FieldKind::T, src, bc) > 5e-4);
}
