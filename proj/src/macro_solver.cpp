#include "homs/macro_solver.hpp"

#include <stdexcept>

namespace homs {

namespace {

bool has_tag(const Mesh& mesh, unsigned tag) {
  for (const auto& be : mesh.boundary_edges)
    if (be.tags & tag) return true;
  return false;
}

void require_dirichlet(const Mesh& mesh, unsigned tag, const char* field) {
  if (!has_tag(mesh, tag))
    throw std::invalid_argument(std::string("no Dirichlet boundary (") + tag_name(tag) + ") for field " + field);
}

}  // namespace

FieldSolution solve_scalar_field(std::shared_ptr<const Mesh> mesh, const std::vector<Mat2>& coeff,
                                 const Expression& source, unsigned dirichlet_tag, const Expression& value,
                                 unsigned flux_tag, const Expression& flux) {
  require_dirichlet(*mesh, dirichlet_tag, dirichlet_tag == kGammaT ? "T" : "c");
  SparseSystem sys;
  sys.components = 1;
  sys.A = assemble_scalar(*mesh, coeff);
  sys.b = Vec::Zero(mesh->num_nodes());
  assemble_volume_load(*mesh, 1, [&](const Eigen::Vector2d& x) { return Eigen::VectorXd::Constant(1, source.value(x)); },
                       sys.b);
  if (has_tag(*mesh, flux_tag))
    assemble_neumann_load(*mesh, flux_tag, 1,
                          [&](const Eigen::Vector2d& x) { return Eigen::VectorXd::Constant(1, flux.value(x)); }, sys.b);
  sys.constraints = dirichlet_constraints(*mesh, dirichlet_tag, 1, [&](const Eigen::Vector2d& x) {
    return Eigen::VectorXd::Constant(1, value.value(x));
  });
  return make_field(mesh, 1, solve_spd(sys));
}

FieldSolution solve_displacement(std::shared_ptr<const Mesh> mesh, const CoupledCoefficients& coeff,
                                 const FieldSolution& T, const FieldSolution& c, const Sources& sources,
                                 const BoundaryData& bcs) {
  require_dirichlet(*mesh, kGammaU, "u");
  SparseSystem sys;
  sys.components = 2;
  sys.A = assemble_elasticity(*mesh, coeff.D);
  sys.b = Vec::Zero(2 * mesh->num_nodes());
  assemble_volume_load(*mesh, 2, [&](const Eigen::Vector2d& x) {
    return Eigen::Vector2d(sources.f[0].value(x), sources.f[1].value(x)).eval();
  }, sys.b);
  assemble_coupling_load(*mesh, coeff.A, T.values, sys.b);
  assemble_coupling_load(*mesh, coeff.B, c.values, sys.b);
  if (has_tag(*mesh, kGammaSigma))
    assemble_neumann_load(*mesh, kGammaSigma, 2, [&](const Eigen::Vector2d& x) {
      return Eigen::Vector2d(bcs.sigma[0].value(x), bcs.sigma[1].value(x)).eval();
    }, sys.b);
  sys.constraints = dirichlet_constraints(*mesh, kGammaU, 2, [&](const Eigen::Vector2d& x) {
    return Eigen::Vector2d(bcs.u[0].value(x), bcs.u[1].value(x)).eval();
  });
  return make_field(mesh, 2, solve_spd(sys));
}

MacroSolution solve_coupled(std::shared_ptr<const Mesh> mesh, const CoupledCoefficients& coeff,
                            const Sources& sources, const BoundaryData& bcs) {
  MacroSolution s;
  s.T = solve_scalar_field(mesh, coeff.k, sources.h, kGammaT, bcs.T, kGammaQ, bcs.q);
  s.c = solve_scalar_field(mesh, coeff.g, sources.m, kGammaC, bcs.c, kGammaD, bcs.d);
  s.u = solve_displacement(mesh, coeff, s.T, s.c, sources, bcs);
  return s;
}

CoupledCoefficients homogenized_coefficients(const Mesh& mesh, const HomogenizedField& homog) {
  CoupledCoefficients c;
  const auto ne = mesh.elements.size();
  c.k.resize(ne);
  c.g.resize(ne);
  c.A.resize(ne);
  c.B.resize(ne);
  c.D.resize(ne);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const HomogenizedTensors t = interpolate_tensor(homog, mesh.centroid(e));
    c.k[e] = t.k;
    c.g[e] = t.g;
    c.A[e] = t.A;
    c.B[e] = t.B;
    c.D[e] = t.D;
  }
  return c;
}

MacroSolution solve_homogenized(std::shared_ptr<const Mesh> mesh, const HomogenizedField& homog,
                                const Sources& sources, const BoundaryData& bcs) {
  return solve_coupled(mesh, homogenized_coefficients(*mesh, homog), sources, bcs);
}

void prepare_macro_derivatives(MacroSolution& s) {
  for (FieldSolution* f : {&s.T, &s.c, &s.u}) {
    recover_gradient(*f);
    recover_hessian(*f);
  }
}

}  // namespace homs
