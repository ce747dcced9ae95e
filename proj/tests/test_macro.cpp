#include <doctest.h>

#include <cmath>

#include "homs/macro_solver.hpp"
#include "homs/metrics.hpp"

using namespace homs;

namespace {

CoupledCoefficients constant_coefficients(const Mesh& m, double k, double g, const Tensor4& D, double a, double b) {
  CoupledCoefficients c;
  const auto ne = m.elements.size();
  c.k.assign(ne, k * Mat2::Identity());
  c.g.assign(ne, g * Mat2::Identity());
  c.D.assign(ne, D);
  c.A.assign(ne, a * Mat2::Identity());
  c.B.assign(ne, b * Mat2::Identity());
  return c;
}

Expression E(const char* s) { return Expression::parse(s); }

}  // namespace

TEST_CASE("coupled patch test with thermal and moisture eigenstress") {
  // T, c and u linear with constant coefficients: the stress is constant and
  // the body force balances div(A T + B c)
  auto mesh = std::make_shared<const Mesh>(build_macro_mesh(Box{}, {6, 7}, BoundaryTagging{}));
  const double a = 0.7, b = 0.3;
  const auto coeff = constant_coefficients(*mesh, 2.0, 0.5, plane_strain(4.0, 0.3), a, b);
  Sources src;
  src.f = {Expression(a * 1.0 + b * -1.0), Expression(a * 2.0 + b * 0.5)};
  BoundaryData bc;
  bc.T = E("1 + x1 + 2*x2");
  bc.c = E("0.2 - x1 + 0.5*x2");
  bc.u = {E("0.01*x1 - 0.02*x2"), E("0.03 + 0.015*x1")};
  const MacroSolution s = solve_coupled(mesh, coeff, src, bc);
  for (int v = 0; v < mesh->num_nodes(); ++v) {
    const auto& x = mesh->nodes[v];
    CHECK(s.T.value(v) == doctest::Approx(bc.T.value(x)).epsilon(1e-10));
    CHECK(s.c.value(v) == doctest::Approx(bc.c.value(x)).epsilon(1e-10));
    CHECK(std::abs(s.u.value(v, 0) - bc.u[0].value(x)) < 1e-10);
    CHECK(std::abs(s.u.value(v, 1) - bc.u[1].value(x)) < 1e-10);
  }
}

TEST_CASE("traction and flux boundaries") {
  BoundaryTagging t;
  t.face[static_cast<int>(Face::Right)] = kGammaQ | kGammaD | kGammaSigma;
  auto mesh = std::make_shared<const Mesh>(build_macro_mesh(Box{}, {8, 8}, t));
  const Tensor4 D = plane_strain(4.0, 0.3);
  const double a = 0.7, b = 0.3, T0 = 2.0, c0 = 1.0;
  const auto coeff = constant_coefficients(*mesh, 2.0, 0.5, D, a, b);
  // u = (0.01 x1 - 0.02 x2, 0.015 x1): σ = D ε(u) - (a T0 + b c0) I is constant
  Mat2 grad_u;
  grad_u << 0.01, -0.02, 0.015, 0.0;
  const Mat2 sigma = contract(D, grad_u) - (a * T0 + b * c0) * Mat2::Identity();
  BoundaryData bc;
  bc.T = Expression(T0);
  bc.q = Expression(0.0);
  bc.c = Expression(c0);
  bc.d = Expression(0.0);
  bc.u = {E("0.01*x1 - 0.02*x2"), E("0.015*x1")};
  bc.sigma = {Expression(sigma(0, 0)), Expression(sigma(1, 0))};
  const MacroSolution s = solve_coupled(mesh, coeff, Sources{}, bc);
  double err = 0;
  for (int v = 0; v < mesh->num_nodes(); ++v) {
    const auto& x = mesh->nodes[v];
    err = std::max({err, std::abs(s.T.value(v) - T0), std::abs(s.c.value(v) - c0),
                    std::abs(s.u.value(v, 0) - bc.u[0].value(x)), std::abs(s.u.value(v, 1) - bc.u[1].value(x))});
  }
  CHECK(err < 1e-10);
}

TEST_CASE("manufactured solutions converge at P1 rates") {
  // T = sin(πx)sin(πy) + x, k = 2: h = 4π² sin sin
  // c = 1 + x² with a flux face on the right, g = 0.5: m = -1, d = 2·0.5 = 1
  BoundaryTagging t;
  t.face[static_cast<int>(Face::Right)] = kGammaT | kGammaD | kGammaU;
  std::vector<std::pair<double, double>> eT, ec;
  for (int n : {8, 16, 32}) {
    auto mesh = std::make_shared<const Mesh>(build_macro_mesh(Box{}, {n, n}, t));
    const auto coeff = constant_coefficients(*mesh, 2.0, 0.5, plane_strain(1.0, 0.3), 0.0, 0.0);
    Sources src;
    src.h = E("4*pi^2*sin(pi*x1)*sin(pi*x2)");
    src.m = Expression(-1.0);
    BoundaryData bc;
    bc.T = E("sin(pi*x1)*sin(pi*x2) + x1");
    bc.c = E("1 + x1^2");
    bc.d = Expression(1.0);
    const MacroSolution s = solve_coupled(mesh, coeff, src, bc);
    Vec Te(mesh->num_nodes()), ce(mesh->num_nodes());
    for (int v = 0; v < mesh->num_nodes(); ++v) {
      Te[v] = bc.T.value(mesh->nodes[v]);
      ce[v] = bc.c.value(mesh->nodes[v]);
    }
    eT.emplace_back(1.0 / n, relative_error(s.T, make_field(mesh, 1, Te), Norm::L2));
    ec.emplace_back(1.0 / n, relative_error(s.c, make_field(mesh, 1, ce), Norm::L2));
  }
  CHECK(fit_convergence_rate(eT) > 1.8);
  CHECK(fit_convergence_rate(ec) > 1.8);
}

TEST_CASE("each field needs a Dirichlet part") {
  BoundaryTagging t;
  for (auto& f : t.face) f = kGammaQ | kGammaC | kGammaU;
  auto mesh = std::make_shared<const Mesh>(build_macro_mesh(Box{}, {3, 3}, t));
  const auto coeff = constant_coefficients(*mesh, 1, 1, plane_strain(1, 0.3), 0, 0);
  CHECK_THROWS_WITH_AS(solve_coupled(mesh, coeff, Sources{}, BoundaryData{}), doctest::Contains("Gamma_T"),
                       std::invalid_argument);
  for (auto& f : t.face) f = kGammaT | kGammaC | kGammaSigma;
  auto mesh2 = std::make_shared<const Mesh>(build_macro_mesh(Box{}, {3, 3}, t));
  CHECK_THROWS_AS(solve_coupled(mesh2, coeff, Sources{}, BoundaryData{}), std::invalid_argument);
}

TEST_CASE("homogenized coefficients come from the interpolated field") {
  HomogenizedField field;
  field.grid = build_representative_grid(Box{}, {2, 1});
  for (int i = 0; i < 2; ++i) {
    HomogenizedTensors t;
    t.k = (1.0 + i) * Mat2::Identity();
    t.g = Mat2::Identity();
    t.D = plane_strain(1.0, 0.3);
    field.values.push_back(t);
  }
  const Mesh mesh = build_macro_mesh(Box{}, {4, 4}, BoundaryTagging{});
  const CoupledCoefficients c = homogenized_coefficients(mesh, field);
  for (int e = 0; e < mesh.num_elements(); ++e)
    CHECK(c.k[e](0, 0) == doctest::Approx(1.0 + mesh.centroid(e).x()));
}

TEST_CASE("derivative recovery populates every field") {
  auto mesh = std::make_shared<const Mesh>(build_macro_mesh(Box{}, {4, 4}, BoundaryTagging{}));
  const auto coeff = constant_coefficients(*mesh, 1, 1, plane_strain(1, 0.3), 0.1, 0.1);
  BoundaryData bc;
  bc.T = E("x1*x2");
  MacroSolution s = solve_coupled(mesh, coeff, Sources{}, bc);
  prepare_macro_derivatives(s);
  CHECK(s.T.gradient.has_value());
  CHECK(s.c.hessian.has_value());
  CHECK(s.u.hessian->rows() == 2 * mesh->num_nodes());
}
