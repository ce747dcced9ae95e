#include "homs/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "homs/reference.hpp"

namespace homs {

namespace {

double squared_norm(const Mesh& mesh, int comps, const Vec& v, Norm norm) {
  double s = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& el = mesh.elements[e];
    const double area = mesh.area(e);
    if (norm == Norm::L2) {
      for (int a = 0; a < 3; ++a)
        for (int c = 0; c < comps; ++c) s += area / 3.0 * v[el[a] * comps + c] * v[el[a] * comps + c];
    } else {
      const auto G = mesh.shape_gradients(e);
      for (int c = 0; c < comps; ++c) {
        const Eigen::Vector2d g =
            G.col(0) * v[el[0] * comps + c] + G.col(1) * v[el[1] * comps + c] + G.col(2) * v[el[2] * comps + c];
        s += area * g.squaredNorm();
      }
    }
  }
  return s;
}

void check_compatible(const FieldSolution& a, const FieldSolution& r) {
  if (a.components != r.components || a.values.size() != r.values.size() || a.mesh->num_nodes() != r.mesh->num_nodes())
    throw std::invalid_argument("fields live on different meshes or have different component counts");
}

}  // namespace

double field_norm(const FieldSolution& f, Norm norm) { return std::sqrt(squared_norm(*f.mesh, f.components, f.values, norm)); }

double error_norm(const FieldSolution& approx, const FieldSolution& reference, Norm norm) {
  check_compatible(approx, reference);
  const Vec diff = approx.values - reference.values;
  return std::sqrt(squared_norm(*reference.mesh, reference.components, diff, norm));
}

double relative_error(const FieldSolution& approx, const FieldSolution& reference, Norm norm) {
  const double den = field_norm(reference, norm);
  if (!(den > 0.0)) throw std::domain_error("relative error undefined: reference norm is zero");
  return error_norm(approx, reference, norm) / den;
}

double residual_diagnostic(const Mesh& fine, const MaterialModel& model, double epsilon, const MacroSolution& fields,
                           FieldKind kind, const Sources& sources, const BoundaryData& bcs) {
  const CoupledCoefficients coeff = fine_coefficients(fine, model, epsilon);
  SparseSystem sys;
  Vec x;
  if (kind == FieldKind::u) {
    sys.components = 2;
    sys.A = assemble_elasticity(fine, coeff.D);
    sys.b = Vec::Zero(2 * fine.num_nodes());
    assemble_volume_load(fine, 2, [&](const Eigen::Vector2d& p) {
      return Eigen::Vector2d(sources.f[0].value(p), sources.f[1].value(p)).eval();
    }, sys.b);
    assemble_coupling_load(fine, coeff.A, fields.T.values, sys.b);
    assemble_coupling_load(fine, coeff.B, fields.c.values, sys.b);
    sys.constraints = dirichlet_constraints(fine, kGammaU, 2, [](const Eigen::Vector2d&) {
      return Eigen::Vector2d::Zero().eval();
    });
    x = fields.u.values;
  } else {
    const bool thermal = kind == FieldKind::T;
    sys.components = 1;
    sys.A = assemble_scalar(fine, thermal ? coeff.k : coeff.g);
    sys.b = Vec::Zero(fine.num_nodes());
    const Expression& src = thermal ? sources.h : sources.m;
    assemble_volume_load(fine, 1, [&](const Eigen::Vector2d& p) { return Eigen::VectorXd::Constant(1, src.value(p)); },
                         sys.b);
    sys.constraints = dirichlet_constraints(fine, thermal ? kGammaT : kGammaC, 1, [](const Eigen::Vector2d&) {
      return Eigen::VectorXd::Zero(1);
    });
    x = thermal ? fields.T.values : fields.c.values;
  }
  // Neumann data enter b exactly as in the reference solve
  if (kind == FieldKind::T && std::any_of(fine.boundary_edges.begin(), fine.boundary_edges.end(),
                                          [](const BoundaryEdge& e) { return e.tags & kGammaQ; }))
    assemble_neumann_load(fine, kGammaQ, 1, [&](const Eigen::Vector2d& p) {
      return Eigen::VectorXd::Constant(1, bcs.q.value(p));
    }, sys.b);
  if (kind == FieldKind::c && std::any_of(fine.boundary_edges.begin(), fine.boundary_edges.end(),
                                          [](const BoundaryEdge& e) { return e.tags & kGammaD; }))
    assemble_neumann_load(fine, kGammaD, 1, [&](const Eigen::Vector2d& p) {
      return Eigen::VectorXd::Constant(1, bcs.d.value(p));
    }, sys.b);
  if (kind == FieldKind::u && std::any_of(fine.boundary_edges.begin(), fine.boundary_edges.end(),
                                          [](const BoundaryEdge& e) { return e.tags & kGammaSigma; }))
    assemble_neumann_load(fine, kGammaSigma, 2, [&](const Eigen::Vector2d& p) {
      return Eigen::Vector2d(bcs.sigma[0].value(p), bcs.sigma[1].value(p)).eval();
    }, sys.b);

  const Vec r = sys.b - sys.A * x;
  double rn = 0.0, bn = 0.0;
  for (int d = 0; d < r.size(); ++d) {
    if (sys.constraints.count(d)) continue;
    rn += r[d] * r[d];
    bn += sys.b[d] * sys.b[d];
  }
  if (!(bn > 0.0)) throw std::domain_error("residual normalization undefined: interior load is zero");
  return std::sqrt(rn / bn);
}

double fit_convergence_rate(const std::vector<std::pair<double, double>>& eps_error) {
  if (eps_error.size() < 2) throw std::invalid_argument("need at least two (eps, error) pairs");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(eps_error.size());
  for (const auto& [e, err] : eps_error) {
    if (!(e > 0.0) || !(err > 0.0)) throw std::invalid_argument("eps and error must be positive");
    const double lx = std::log(e), ly = std::log(err);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = n * sxx - sx * sx;
  if (den == 0.0) throw std::invalid_argument("all eps values are equal");
  return (n * sxy - sx * sy) / den;
}

std::string ErrorReport::key(FieldKind f, Norm n, int order) {
  static const char* names[] = {"T", "c", "u"};
  return std::string(names[static_cast<int>(f)]) + "error" + (n == Norm::L2 ? "L2" : "H1") + std::to_string(order);
}

std::vector<std::string> ErrorReport::columns() {
  std::vector<std::string> cols;
  for (FieldKind f : {FieldKind::T, FieldKind::c, FieldKind::u})
    for (Norm n : {Norm::L2, Norm::H1semi})
      for (int o = 0; o < 3; ++o) cols.push_back(key(f, n, o));
  return cols;
}

ErrorReport compare(const std::string& experiment, const std::array<const MacroSolution*, 3>& approx,
                    const MacroSolution& reference) {
  ErrorReport r;
  r.experiment = experiment;
  for (int o = 0; o < 3; ++o) {
    if (!approx[o]) continue;
    for (Norm n : {Norm::L2, Norm::H1semi}) {
      r.errors[ErrorReport::key(FieldKind::T, n, o)] = relative_error(approx[o]->T, reference.T, n);
      r.errors[ErrorReport::key(FieldKind::c, n, o)] = relative_error(approx[o]->c, reference.c, n);
      r.errors[ErrorReport::key(FieldKind::u, n, o)] = relative_error(approx[o]->u, reference.u, n);
    }
  }
  return r;
}

void write_error_csv(const std::string& path, const std::vector<ErrorReport>& reports) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out.precision(10);
  const auto cols = ErrorReport::columns();
  out << "experiment";
  for (const auto& c : cols) out << ',' << c;
  out << '\n';
  for (const auto& r : reports) {
    out << r.experiment;
    for (const auto& c : cols) {
      out << ',';
      if (auto it = r.errors.find(c); it != r.errors.end()) out << it->second;
    }
    out << '\n';
  }
}

}  // namespace homs
