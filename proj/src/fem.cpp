#include "homs/fem.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include <Eigen/LU>

namespace homs {

Eigen::Matrix3d scalar_element_matrix(const Mesh& mesh, int e, const Mat2& K) {
  const auto G = mesh.shape_gradients(e);
  return mesh.area(e) * (G.transpose() * K * G);
}

Eigen::Matrix<double, 6, 6> elasticity_element_matrix(const Mesh& mesh, int e, const Tensor4& D) {
  const auto G = mesh.shape_gradients(e);
  const double area = mesh.area(e);
  Eigen::Matrix<double, 6, 6> K = Eigen::Matrix<double, 6, 6>::Zero();
  for (int a = 0; a < 3; ++a)
    for (int i = 0; i < 2; ++i)
      for (int b = 0; b < 3; ++b)
        for (int k = 0; k < 2; ++k) {
          double s = 0.0;
          for (int j = 0; j < 2; ++j)
            for (int l = 0; l < 2; ++l) s += t4(D, i, j, k, l) * G(j, a) * G(l, b);
          K(2 * a + i, 2 * b + k) = area * s;
        }
  return K;
}

namespace {

void check_spd(const Mat2& K, const Mesh& mesh, int e) {
  if (!(K(0, 0) > 0.0) || !(K.determinant() > 0.0)) {
    std::ostringstream os;
    const auto c = mesh.centroid(e);
    os << "coefficient not elliptic on element " << e << " (centroid " << c.x() << ", " << c.y() << ")";
    throw EllipticityError(os.str());
  }
}

}  // namespace

SpMat assemble_scalar(const Mesh& mesh, const std::vector<Mat2>& per_element) {
  if (per_element.size() != mesh.elements.size()) throw std::invalid_argument("one coefficient per element expected");
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(9 * mesh.elements.size());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    check_spd(per_element[e], mesh, e);
    const Eigen::Matrix3d Ke = scalar_element_matrix(mesh, e, per_element[e]);
    const auto& el = mesh.elements[e];
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) trip.emplace_back(el[a], el[b], Ke(a, b));
  }
  SpMat A(mesh.num_nodes(), mesh.num_nodes());
  A.setFromTriplets(trip.begin(), trip.end());
  return A;
}

SpMat assemble_scalar(const Mesh& mesh, const std::function<Mat2(const Eigen::Vector2d&)>& coeff) {
  std::vector<Mat2> k(mesh.elements.size());
  for (int e = 0; e < mesh.num_elements(); ++e) k[e] = coeff(mesh.centroid(e));
  return assemble_scalar(mesh, k);
}

SpMat assemble_elasticity(const Mesh& mesh, const std::vector<Tensor4>& per_element) {
  if (per_element.size() != mesh.elements.size()) throw std::invalid_argument("one tensor per element expected");
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(36 * mesh.elements.size());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto Ke = elasticity_element_matrix(mesh, e, per_element[e]);
    const auto& el = mesh.elements[e];
    for (int a = 0; a < 3; ++a)
      for (int i = 0; i < 2; ++i)
        for (int b = 0; b < 3; ++b)
          for (int k = 0; k < 2; ++k) trip.emplace_back(2 * el[a] + i, 2 * el[b] + k, Ke(2 * a + i, 2 * b + k));
  }
  SpMat A(2 * mesh.num_nodes(), 2 * mesh.num_nodes());
  A.setFromTriplets(trip.begin(), trip.end());
  return A;
}

SpMat assemble_elasticity(const Mesh& mesh, const std::function<Tensor4(const Eigen::Vector2d&)>& coeff) {
  std::vector<Tensor4> D(mesh.elements.size());
  for (int e = 0; e < mesh.num_elements(); ++e) D[e] = coeff(mesh.centroid(e));
  return assemble_elasticity(mesh, D);
}

void assemble_volume_load(const Mesh& mesh, int components,
                          const std::function<Eigen::VectorXd(const Eigen::Vector2d&)>& f, Vec& rhs) {
  // nodal values once, then |e|/3 per vertex
  std::vector<Eigen::VectorXd> fv(mesh.nodes.size());
  for (int v = 0; v < mesh.num_nodes(); ++v) fv[v] = f(mesh.nodes[v]);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const double w = mesh.area(e) / 3.0;
    for (int v : mesh.elements[e])
      for (int i = 0; i < components; ++i) rhs[v * components + i] += w * fv[v][i];
  }
}

void assemble_element_load(const Mesh& mesh, int components, const std::vector<double>& values, Vec& rhs) {
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const double w = mesh.area(e) / 3.0;
    for (int v : mesh.elements[e])
      for (int i = 0; i < components; ++i) rhs[v * components + i] += w * values[e * components + i];
  }
}

void assemble_flux_load(const Mesh& mesh, int components, const std::vector<double>& q, Vec& rhs) {
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto G = mesh.shape_gradients(e);
    const double area = mesh.area(e);
    const auto& el = mesh.elements[e];
    if (components == 1) {
      const Eigen::Vector2d qe(q[2 * e], q[2 * e + 1]);
      for (int a = 0; a < 3; ++a) rhs[el[a]] += area * qe.dot(G.col(a));
    } else {
      for (int a = 0; a < 3; ++a)
        for (int i = 0; i < 2; ++i)
          rhs[2 * el[a] + i] += area * (q[4 * e + 2 * i] * G(0, a) + q[4 * e + 2 * i + 1] * G(1, a));
    }
  }
}

void assemble_coupling_load(const Mesh& mesh, const std::vector<Mat2>& tensor, const Vec& scalar_field, Vec& rhs) {
  std::vector<double> q(4 * mesh.elements.size());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& el = mesh.elements[e];
    const double mean = (scalar_field[el[0]] + scalar_field[el[1]] + scalar_field[el[2]]) / 3.0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) q[4 * e + 2 * i + j] = tensor[e](i, j) * mean;
  }
  assemble_flux_load(mesh, 2, q, rhs);
}

void assemble_neumann_load(const Mesh& mesh, unsigned tag, int components,
                           const std::function<Eigen::VectorXd(const Eigen::Vector2d&)>& flux, Vec& rhs) {
  if (tag & kAllDirichlet) throw std::invalid_argument("Neumann load requested on Dirichlet tag " + tag_name(tag));
  bool any = false;
  for (const auto& be : mesh.boundary_edges) {
    if (!(be.tags & tag)) continue;
    any = true;
    const double len = (mesh.nodes[be.b] - mesh.nodes[be.a]).norm();
    const Eigen::VectorXd fa = flux(mesh.nodes[be.a]);
    const Eigen::VectorXd fb = flux(mesh.nodes[be.b]);
    for (int i = 0; i < components; ++i) {
      rhs[be.a * components + i] += 0.5 * len * fa[i];
      rhs[be.b * components + i] += 0.5 * len * fb[i];
    }
  }
  if (!any) throw std::invalid_argument("no boundary edge carries tag " + tag_name(tag));
}

std::map<int, double> dirichlet_constraints(const Mesh& mesh, unsigned tag, int components,
                                            const std::function<Eigen::VectorXd(const Eigen::Vector2d&)>& value) {
  std::map<int, double> c;
  for (const auto& be : mesh.boundary_edges) {
    if (!(be.tags & tag)) continue;
    for (int v : {be.a, be.b}) {
      if (c.count(v * components)) continue;
      const Eigen::VectorXd val = value(mesh.nodes[v]);
      for (int i = 0; i < components; ++i) c[v * components + i] = val[i];
    }
  }
  return c;
}

std::map<int, double> zero_constraints(const std::vector<int>& nodes, int components) {
  std::map<int, double> c;
  for (int v : nodes)
    for (int i = 0; i < components; ++i) c[v * components + i] = 0.0;
  return c;
}

namespace {

void split(const SpMat& A, const std::vector<int>& reduced, const std::vector<int>& cidx, int nf, int nc, SpMat& Aff,
           SpMat& Afc) {
  std::vector<Eigen::Triplet<double>> tff, tfc;
  tff.reserve(A.nonZeros());
  for (int col = 0; col < A.outerSize(); ++col) {
    for (SpMat::InnerIterator it(A, col); it; ++it) {
      const int r = reduced[it.row()];
      if (r < 0) continue;
      const int cf = reduced[col];
      if (cf >= 0) tff.emplace_back(r, cf, it.value());
      else tfc.emplace_back(r, cidx[col], it.value());
    }
  }
  Aff.resize(nf, nf);
  Aff.setFromTriplets(tff.begin(), tff.end());
  Afc.resize(nf, nc);
  Afc.setFromTriplets(tfc.begin(), tfc.end());
}

}  // namespace

ConstrainedSystem apply_dirichlet(const SparseSystem& system) {
  const int n = static_cast<int>(system.A.rows());
  ConstrainedSystem cs;
  cs.reduced_index.assign(n, -1);
  cs.full_values = Vec::Zero(n);
  std::vector<int> cidx(n, -1);
  Vec g(system.constraints.size());
  int nc = 0;
  for (const auto& [dof, val] : system.constraints) {
    cidx[dof] = nc;
    g[nc++] = val;
    cs.full_values[dof] = val;
  }
  for (int d = 0; d < n; ++d) {
    if (cidx[d] >= 0) continue;
    cs.reduced_index[d] = static_cast<int>(cs.free_dofs.size());
    cs.free_dofs.push_back(d);
  }
  SpMat Afc;
  split(system.A, cs.reduced_index, cidx, static_cast<int>(cs.free_dofs.size()), nc, cs.A, Afc);
  cs.b.resize(cs.free_dofs.size());
  for (std::size_t r = 0; r < cs.free_dofs.size(); ++r) cs.b[r] = system.b[cs.free_dofs[r]];
  if (nc > 0) cs.b -= Afc * g;
  return cs;
}

SpdSolver::SpdSolver(const SpMat& A, const std::map<int, double>& constraints) : A_full_(A) {
  const int n = static_cast<int>(A.rows());
  std::vector<int> reduced(n, -1), cidx(n, -1);
  constrained_values_.resize(constraints.size());
  int nc = 0;
  for (const auto& [dof, val] : constraints) {
    cidx[dof] = nc;
    constrained_dofs_.push_back(dof);
    constrained_values_[nc++] = val;
  }
  for (int d = 0; d < n; ++d) {
    if (cidx[d] >= 0) continue;
    reduced[d] = static_cast<int>(free_dofs_.size());
    free_dofs_.push_back(d);
  }
  split(A, reduced, cidx, static_cast<int>(free_dofs_.size()), nc, A_ff_, A_fc_);
  if (!free_dofs_.empty()) {
    llt_.compute(A_ff_);
    if (llt_.info() != Eigen::Success)
      throw SolverError("Cholesky factorization failed: operator is not positive definite after constraints "
                        "(missing Dirichlet data?)");
  }
}

Vec SpdSolver::solve(const Vec& rhs) const {
  Vec full(A_full_.rows());
  full.setZero();
  for (std::size_t c = 0; c < constrained_dofs_.size(); ++c) full[constrained_dofs_[c]] = constrained_values_[c];
  if (free_dofs_.empty()) return full;
  Vec b(free_dofs_.size());
  for (std::size_t r = 0; r < free_dofs_.size(); ++r) b[r] = rhs[free_dofs_[r]];
  if (constrained_values_.size() > 0) b -= A_fc_ * constrained_values_;
  const double bnorm = b.norm();
  Vec x = Vec::Zero(b.size());
  last_residual_ = 0.0;
  if (bnorm > 0.0) {
    x = llt_.solve(b);
    Vec r = b - A_ff_ * x;
    last_residual_ = r.norm() / bnorm;
    // a couple of refinement sweeps for badly scaled high-contrast systems
    for (int it = 0; it < 3 && last_residual_ > 1e-12; ++it) {
      x += llt_.solve(r);
      r = b - A_ff_ * x;
      last_residual_ = r.norm() / bnorm;
    }
    if (!(last_residual_ <= 1e-10)) {
      std::ostringstream os;
      os << "SPD solve did not reach tolerance: relative residual " << last_residual_;
      throw SolverError(os.str());
    }
  }
  for (std::size_t r = 0; r < free_dofs_.size(); ++r) full[free_dofs_[r]] = x[r];
  return full;
}

Vec solve_spd(const SparseSystem& system) {
  SpdSolver solver(system.A, system.constraints);
  return solver.solve(system.b);
}

Eigen::Vector2d FieldSolution::element_gradient(int e, int c) const {
  const auto G = mesh->shape_gradients(e);
  const auto& el = mesh->elements[e];
  return G.col(0) * value(el[0], c) + G.col(1) * value(el[1], c) + G.col(2) * value(el[2], c);
}

double FieldSolution::element_mean(int e, int c) const {
  const auto& el = mesh->elements[e];
  return (value(el[0], c) + value(el[1], c) + value(el[2], c)) / 3.0;
}

double FieldSolution::interpolate(const Eigen::Vector2d& x, int c) const {
  Eigen::Vector3d bary;
  const int e = mesh->locate(x, bary);
  const auto& el = mesh->elements[e];
  return bary[0] * value(el[0], c) + bary[1] * value(el[1], c) + bary[2] * value(el[2], c);
}

FieldSolution make_field(std::shared_ptr<const Mesh> mesh, int components, Vec values) {
  if (values.size() != static_cast<Eigen::Index>(mesh->nodes.size()) * components)
    throw std::invalid_argument("field length does not match mesh");
  FieldSolution s;
  s.mesh = std::move(mesh);
  s.components = components;
  s.values = std::move(values);
  return s;
}

Eigen::MatrixXd recover_gradient(const Mesh& mesh, int components, const Vec& values) {
  const int n = mesh.num_nodes();
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n) * components, 2);
  std::vector<double> weight(n, 0.0);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto G = mesh.shape_gradients(e);
    const double area = mesh.area(e);
    const auto& el = mesh.elements[e];
    for (int c = 0; c < components; ++c) {
      const Eigen::Vector2d ge = G.col(0) * values[el[0] * components + c] + G.col(1) * values[el[1] * components + c] +
                                 G.col(2) * values[el[2] * components + c];
      for (int v : el) grad.row(v * components + c) += area * ge.transpose();
    }
    for (int v : el) weight[v] += area;
  }
  for (int v = 0; v < n; ++v)
    for (int c = 0; c < components; ++c) grad.row(v * components + c) /= weight[v];
  return grad;
}

void recover_gradient(FieldSolution& s) { s.gradient = recover_gradient(*s.mesh, s.components, s.values); }

void recover_hessian(FieldSolution& s) {
  if (!s.gradient) recover_gradient(s);
  const int n = s.mesh->num_nodes();
  const int nc = s.components;
  // treat the 2*nc gradient components as one P1 field with 2*nc components
  Vec g(static_cast<Eigen::Index>(n) * nc * 2);
  for (int v = 0; v < n; ++v)
    for (int c = 0; c < nc; ++c)
      for (int d = 0; d < 2; ++d) g[(v * nc + c) * 2 + d] = (*s.gradient)(v * nc + c, d);
  const Eigen::MatrixXd gg = recover_gradient(*s.mesh, 2 * nc, g);
  Eigen::MatrixXd H(static_cast<Eigen::Index>(n) * nc, 4);
  for (int v = 0; v < n; ++v)
    for (int c = 0; c < nc; ++c) {
      const int row = v * nc + c;
      const double h00 = gg((v * nc + c) * 2 + 0, 0);
      const double h01 = gg((v * nc + c) * 2 + 0, 1);
      const double h10 = gg((v * nc + c) * 2 + 1, 0);
      const double h11 = gg((v * nc + c) * 2 + 1, 1);
      const double off = 0.5 * (h01 + h10);
      H(row, 0) = h00;
      H(row, 1) = off;
      H(row, 2) = off;
      H(row, 3) = h11;
    }
  s.hessian = H;
}

}  // namespace homs
