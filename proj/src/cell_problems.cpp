#include "homs/cell_problems.hpp"

namespace homs {

CellCoefficients cell_coefficients(const Mesh& cell, const MaterialModel& model, const Eigen::Vector2d& x) {
  const int ne = cell.num_elements();
  CellCoefficients c;
  c.k.resize(ne);
  c.g.resize(ne);
  c.alpha.resize(ne);
  c.beta.resize(ne);
  c.Dalpha.resize(ne);
  c.Dbeta.resize(ne);
  c.D.resize(ne);
  // two phases only: evaluate once per phase
  const CoefficientBundle phase_values[2] = {evaluate_phase(model, x, Phase::Matrix),
                                             evaluate_phase(model, x, Phase::Inclusion)};
  for (int e = 0; e < ne; ++e) {
    const CoefficientBundle& b = phase_values[static_cast<int>(cell.phases[e])];
    c.k[e] = b.k;
    c.g[e] = b.g;
    c.alpha[e] = b.alpha;
    c.beta[e] = b.beta;
    c.D[e] = b.D;
    c.Dalpha[e] = b.thermal_stress();
    c.Dbeta[e] = b.moisture_stress();
  }
  return c;
}

Vec vector_field(const Eigen::MatrixXd& data, int c0) {
  const Eigen::Index n = data.rows();
  Vec v(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    v[2 * i] = data(i, c0);
    v[2 * i + 1] = data(i, c0 + 1);
  }
  return v;
}

void store_vector_field(Eigen::MatrixXd& data, int c0, const Vec& v) {
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    data(i, c0) = v[2 * i];
    data(i, c0 + 1) = v[2 * i + 1];
  }
}

CellOperators::CellOperators(const UnitCellMesh& cell, const CellCoefficients& coeff)
    : thermal(assemble_scalar(cell, coeff.k), zero_constraints(cell.boundary_nodes, 1)),
      moisture(assemble_scalar(cell, coeff.g), zero_constraints(cell.boundary_nodes, 1)),
      elastic(assemble_elasticity(cell, coeff.D), zero_constraints(cell.boundary_nodes, 2)) {}

namespace {

double mean(const Mesh& m, const Eigen::MatrixXd& data, int e, int c) {
  const auto& el = m.elements[e];
  return (data(el[0], c) + data(el[1], c) + data(el[2], c)) / 3.0;
}

Eigen::Vector2d grad(const Eigen::Matrix<double, 2, 3>& G, const Mesh& m, const Eigen::MatrixXd& data, int e, int c) {
  const auto& el = m.elements[e];
  return G.col(0) * data(el[0], c) + G.col(1) * data(el[1], c) + G.col(2) * data(el[2], c);
}

// Weak solve of div(K grad u) = f + div q:  a(u, v) = -(f, v) + (q, grad v).
// f: one value per element (and component); q: 2 (scalar) or 4 (vector) per element.
Vec solve_weak(const Mesh& m, const SpdSolver& solver, int components, const std::vector<double>& f,
               const std::vector<double>& q) {
  Vec rhs = Vec::Zero(static_cast<Eigen::Index>(m.num_nodes()) * components);
  if (!f.empty()) {
    std::vector<double> neg(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) neg[i] = -f[i];
    assemble_element_load(m, components, neg, rhs);
  }
  if (!q.empty()) assemble_flux_load(m, components, q, rhs);
  return solver.solve(rhs);
}

}  // namespace

FirstOrderCellSet solve_first_order(const UnitCellMesh& cell, const CellCoefficients& coeff, const CellOperators& ops,
                                    const Eigen::Vector2d& x) {
  const int ne = cell.num_elements();
  FirstOrderCellSet s;
  s.x = x;
  s.data = Eigen::MatrixXd::Zero(cell.num_nodes(), col::kFirst);
  std::vector<double> q2(2 * ne), q4(4 * ne);
  for (int a = 0; a < 2; ++a) {
    for (int e = 0; e < ne; ++e)
      for (int i = 0; i < 2; ++i) q2[2 * e + i] = -coeff.k[e](i, a);
    s.data.col(col::H(a)) = solve_weak(cell, ops.thermal, 1, {}, q2);
    for (int e = 0; e < ne; ++e)
      for (int i = 0; i < 2; ++i) q2[2 * e + i] = -coeff.g[e](i, a);
    s.data.col(col::L(a)) = solve_weak(cell, ops.moisture, 1, {}, q2);
  }
  for (int a1 = 0; a1 < 2; ++a1)
    for (int h = 0; h < 2; ++h) {
      for (int e = 0; e < ne; ++e)
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) q4[4 * e + 2 * i + j] = -t4(coeff.D[e], i, j, h, a1);
      store_vector_field(s.data, col::X(a1, h, 0), solve_weak(cell, ops.elastic, 2, {}, q4));
    }
  for (int e = 0; e < ne; ++e)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) q4[4 * e + 2 * i + j] = -coeff.Dalpha[e](i, j);
  store_vector_field(s.data, col::M(0), solve_weak(cell, ops.elastic, 2, {}, q4));
  for (int e = 0; e < ne; ++e)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) q4[4 * e + 2 * i + j] = -coeff.Dbeta[e](i, j);
  store_vector_field(s.data, col::N(0), solve_weak(cell, ops.elastic, 2, {}, q4));
  return s;
}

FirstOrderCellSet solve_first_order(const UnitCellMesh& cell, const MaterialModel& model, const Eigen::Vector2d& x) {
  const CellCoefficients coeff = cell_coefficients(cell, model, x);
  const CellOperators ops(cell, coeff);
  return solve_first_order(cell, coeff, ops, x);
}

Eigen::MatrixXd element_quantities(const Mesh& cell, const CellCoefficients& coeff, const FirstOrderCellSet& first,
                                   const HomogenizedTensors& hom) {
  const int ne = cell.num_elements();
  Eigen::MatrixXd E(ne, ecol::kCount);
  const auto& d = first.data;
  for (int e = 0; e < ne; ++e) {
    const auto G = cell.shape_gradients(e);
    const Tensor4& D = coeff.D[e];
    for (int a1 = 0; a1 < 2; ++a1) {
      const Eigen::Vector2d kh = coeff.k[e] * grad(G, cell, d, e, col::H(a1));
      const Eigen::Vector2d gl = coeff.g[e] * grad(G, cell, d, e, col::L(a1));
      for (int i = 0; i < 2; ++i) {
        E(e, ecol::K(a1, i)) = hom.k(i, a1) - coeff.k[e](i, a1) - kh[i];
        E(e, ecol::G(a1, i)) = hom.g(i, a1) - coeff.g[e](i, a1) - gl[i];
      }
      for (int h = 0; h < 2; ++h) {
        // ∂_l X_k as a 2×2 matrix gX(k, l)
        Mat2 gX;
        for (int k = 0; k < 2; ++k) gX.row(k) = grad(G, cell, d, e, col::X(a1, h, k)).transpose();
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) {
            double s = 0.0;
            for (int k = 0; k < 2; ++k)
              for (int l = 0; l < 2; ++l) s += t4(D, i, j, k, l) * gX(k, l);
            E(e, ecol::X(a1, h, i, j)) = t4(hom.D, i, j, h, a1) - t4(D, i, j, h, a1) - s;
          }
      }
    }
    Mat2 gM, gN;
    for (int k = 0; k < 2; ++k) {
      gM.row(k) = grad(G, cell, d, e, col::M(k)).transpose();
      gN.row(k) = grad(G, cell, d, e, col::N(k)).transpose();
    }
    const Mat2 sM = contract(D, gM) + coeff.Dalpha[e] - hom.A;
    const Mat2 sN = contract(D, gN) + coeff.Dbeta[e] - hom.B;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        E(e, ecol::M(i, j)) = sM(i, j);
        E(e, ecol::N(i, j)) = sN(i, j);
      }
  }
  return E;
}

namespace {

// Loads shared by the general and the separated path (no x-derivatives):
// H_{a1a2}, L_{a1a2}, P^{a1a2}, Z^{a1} and G^{a1}.
struct DirectLoads {
  const UnitCellMesh& cell;
  const CellCoefficients& coeff;
  const CellOperators& ops;
  const Eigen::MatrixXd& F1;  // first-order data
  const Eigen::MatrixXd& E;   // element quantities

  Vec H2(int a1, int a2, bool moisture) const {
    const int ne = cell.num_elements();
    std::vector<double> f(ne), q(2 * ne);
    const auto& K = moisture ? coeff.g : coeff.k;
    const int hcol = moisture ? col::L(a1) : col::H(a1);
    for (int e = 0; e < ne; ++e) {
      f[e] = E(e, moisture ? ecol::G(a2, a1) : ecol::K(a2, a1));
      const double m = mean(cell, F1, e, hcol);
      for (int i = 0; i < 2; ++i) q[2 * e + i] = -K[e](i, a2) * m;
    }
    return solve_weak(cell, moisture ? ops.moisture : ops.thermal, 1, f, q);
  }

  Vec P(int a1, int a2, int h) const {
    const int ne = cell.num_elements();
    std::vector<double> f(2 * ne), q(4 * ne);
    for (int e = 0; e < ne; ++e) {
      for (int i = 0; i < 2; ++i) f[2 * e + i] = E(e, ecol::X(a2, h, i, a1));
      double mx[2] = {mean(cell, F1, e, col::X(a1, h, 0)), mean(cell, F1, e, col::X(a1, h, 1))};
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          q[4 * e + 2 * i + j] = -(t4(coeff.D[e], i, j, 0, a2) * mx[0] + t4(coeff.D[e], i, j, 1, a2) * mx[1]);
    }
    return solve_weak(cell, ops.elastic, 2, f, q);
  }

  // Z^{a1} (moisture = false) or G^{a1} (moisture = true)
  Vec ZG(int a1, bool moisture) const {
    const int ne = cell.num_elements();
    std::vector<double> f(2 * ne), q(4 * ne);
    for (int e = 0; e < ne; ++e) {
      for (int i = 0; i < 2; ++i) f[2 * e + i] = E(e, moisture ? ecol::N(i, a1) : ecol::M(i, a1));
      const double m0 = mean(cell, F1, e, moisture ? col::N(0) : col::M(0));
      const double m1 = mean(cell, F1, e, moisture ? col::N(1) : col::M(1));
      const double mh = mean(cell, F1, e, moisture ? col::L(a1) : col::H(a1));
      const Mat2& S = moisture ? coeff.Dbeta[e] : coeff.Dalpha[e];
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          q[4 * e + 2 * i + j] = t4(coeff.D[e], i, j, 0, a1) * m0 + t4(coeff.D[e], i, j, 1, a1) * m1 + S(i, j) * mh;
    }
    return solve_weak(cell, ops.elastic, 2, f, q);
  }
};

}  // namespace

SecondOrderCellSet solve_second_order(const UnitCellMesh& cell, const MaterialModel& model, const Stencil& st) {
  if (!st.center.set) throw std::invalid_argument("stencil without center cell set");
  for (int m = 0; m < 2; ++m)
    if (st.step[m] != 0.0 && (!st.lo[m].set || !st.hi[m].set))
      throw std::invalid_argument("missing stencil data along axis " + std::to_string(m + 1));

  const int ne = cell.num_elements();
  const FirstOrderCellSet& c = *st.center.set;
  const CellCoefficients coeff = cell_coefficients(cell, model, c.x);
  const CellOperators ops(cell, coeff);
  const Eigen::MatrixXd E = element_quantities(cell, coeff, c, st.center.hom);

  // x-derivatives of the nodal first-order data and of the element quantities
  std::array<Eigen::MatrixXd, 2> dF, dE;
  for (int m = 0; m < 2; ++m) {
    if (st.step[m] == 0.0) {
      dF[m] = Eigen::MatrixXd::Zero(c.data.rows(), c.data.cols());
      dE[m] = Eigen::MatrixXd::Zero(E.rows(), E.cols());
      continue;
    }
    const auto& lo = st.lo[m];
    const auto& hi = st.hi[m];
    dF[m] = (hi.set->data - lo.set->data) / st.step[m];
    auto quantities = [&](const StencilPoint& p) {
      if (p.set == st.center.set) return E;
      return element_quantities(cell, cell_coefficients(cell, model, p.set->x), *p.set, p.hom);
    };
    dE[m] = (quantities(hi) - quantities(lo)) / st.step[m];
  }

  SecondOrderCellSet out;
  out.x = c.x;
  out.data = Eigen::MatrixXd::Zero(cell.num_nodes(), col::kSecond);
  const DirectLoads direct{cell, coeff, ops, c.data, E};

  for (int a1 = 0; a1 < 2; ++a1)
    for (int a2 = 0; a2 < 2; ++a2) {
      out.data.col(col::H2(a1, a2)) = direct.H2(a1, a2, false);
      out.data.col(col::L2(a1, a2)) = direct.H2(a1, a2, true);
      for (int h = 0; h < 2; ++h) store_vector_field(out.data, col::P(a1, a2, h, 0), direct.P(a1, a2, h));
    }

  std::vector<double> f1(ne), q2(2 * ne), f2(2 * ne), q4(4 * ne);
  for (int a1 = 0; a1 < 2; ++a1) {
    // R_{a1} and S_{a1}
    for (int moisture = 0; moisture < 2; ++moisture) {
      const auto& K = moisture ? coeff.g : coeff.k;
      const int hcol = moisture ? col::L(a1) : col::H(a1);
      for (int e = 0; e < ne; ++e) {
        double f = 0.0;
        for (int i = 0; i < 2; ++i) f += dE[i](e, moisture ? ecol::G(a1, i) : ecol::K(a1, i));
        f1[e] = f;
        const Eigen::Vector2d dh(mean(cell, dF[0], e, hcol), mean(cell, dF[1], e, hcol));
        const Eigen::Vector2d qe = -(K[e] * dh);
        q2[2 * e] = qe[0];
        q2[2 * e + 1] = qe[1];
      }
      out.data.col(moisture ? col::S(a1) : col::R(a1)) =
          solve_weak(cell, moisture ? ops.moisture : ops.thermal, 1, f1, q2);
    }
    // Q^{a1}_{.h}
    for (int h = 0; h < 2; ++h) {
      for (int e = 0; e < ne; ++e) {
        for (int i = 0; i < 2; ++i) f2[2 * e + i] = dE[0](e, ecol::X(a1, h, i, 0)) + dE[1](e, ecol::X(a1, h, i, 1));
        // dX(k, l) = mean of ∂X_k/∂x_l
        Mat2 dX;
        for (int k = 0; k < 2; ++k)
          for (int l = 0; l < 2; ++l) dX(k, l) = mean(cell, dF[l], e, col::X(a1, h, k));
        const Mat2 s = contract(coeff.D[e], dX);
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) q4[4 * e + 2 * i + j] = -s(i, j);
      }
      store_vector_field(out.data, col::Q(a1, h, 0), solve_weak(cell, ops.elastic, 2, f2, q4));
    }
    store_vector_field(out.data, col::Z(a1, 0), direct.ZG(a1, false));
    store_vector_field(out.data, col::G(a1, 0), direct.ZG(a1, true));
  }

  // W and F
  for (int moisture = 0; moisture < 2; ++moisture) {
    for (int e = 0; e < ne; ++e) {
      for (int i = 0; i < 2; ++i)
        f2[2 * e + i] = moisture ? dE[0](e, ecol::N(i, 0)) + dE[1](e, ecol::N(i, 1))
                                 : dE[0](e, ecol::M(i, 0)) + dE[1](e, ecol::M(i, 1));
      Mat2 dM;
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) dM(k, l) = mean(cell, dF[l], e, moisture ? col::N(k) : col::M(k));
      const Mat2 s = contract(coeff.D[e], dM);
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) q4[4 * e + 2 * i + j] = s(i, j);
    }
    store_vector_field(out.data, moisture ? col::F(0) : col::W(0), solve_weak(cell, ops.elastic, 2, f2, q4));
  }
  return out;
}

FirstOrderCellSet solve_first_order_separated(const UnitCellMesh& cell, const MaterialModel& star_model) {
  // the star model is x-independent; any point will do
  return solve_first_order(cell, star_model, Eigen::Vector2d::Zero());
}

StarSecondOrderSet solve_second_order_separated(const UnitCellMesh& cell, const MaterialModel& star_model,
                                                const FirstOrderCellSet& star_first,
                                                const HomogenizedTensors& star_hom) {
  const int ne = cell.num_elements();
  const CellCoefficients coeff = cell_coefficients(cell, star_model, star_first.x);
  const CellOperators ops(cell, coeff);
  const Eigen::MatrixXd E = element_quantities(cell, coeff, star_first, star_hom);
  const DirectLoads direct{cell, coeff, ops, star_first.data, E};

  StarSecondOrderSet out;
  out.data = Eigen::MatrixXd::Zero(cell.num_nodes(), col::star::kCount);
  namespace cs = col::star;
  std::vector<double> f1(ne), f2(2 * ne), q4(4 * ne);
  for (int a1 = 0; a1 < 2; ++a1) {
    for (int a2 = 0; a2 < 2; ++a2) {
      out.data.col(cs::H2(a1, a2)) = direct.H2(a1, a2, false);
      out.data.col(cs::L2(a1, a2)) = direct.H2(a1, a2, true);
      for (int h = 0; h < 2; ++h) store_vector_field(out.data, cs::P(a1, a2, h, 0), direct.P(a1, a2, h));
      // R~_{a1a2}: f = k̂*_{a2a1} - k*_{a2a1} - k*_{a2j} ∂_j H_a1, no flux part
      for (int e = 0; e < ne; ++e) f1[e] = E(e, ecol::K(a1, a2));
      out.data.col(cs::R(a1, a2)) = solve_weak(cell, ops.thermal, 1, f1, {});
      for (int e = 0; e < ne; ++e) f1[e] = E(e, ecol::G(a1, a2));
      out.data.col(cs::S(a1, a2)) = solve_weak(cell, ops.moisture, 1, f1, {});
      // Q~^{a1a2}_{.h}: f_i = D̂*_{i a2 h a1} - D*_{i a2 h a1} - D*_{i a2 kl} ∂_l X^{a1}_kh
      for (int h = 0; h < 2; ++h) {
        for (int e = 0; e < ne; ++e)
          for (int i = 0; i < 2; ++i) f2[2 * e + i] = E(e, ecol::X(a1, h, i, a2));
        store_vector_field(out.data, cs::Q(a1, a2, h, 0), solve_weak(cell, ops.elastic, 2, f2, {}));
      }
    }
    // W~^{a1} (and F~): f_i = 2 (D*_{i a1 kl}(∂_l M~_k + α*_kl) - Â*_{i a1}), q_ij = D*_{ijk a1} M~_k
    for (int moisture = 0; moisture < 2; ++moisture) {
      for (int e = 0; e < ne; ++e) {
        for (int i = 0; i < 2; ++i) f2[2 * e + i] = 2.0 * E(e, moisture ? ecol::N(i, a1) : ecol::M(i, a1));
        const double m0 = mean(cell, star_first.data, e, moisture ? col::N(0) : col::M(0));
        const double m1 = mean(cell, star_first.data, e, moisture ? col::N(1) : col::M(1));
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j)
            q4[4 * e + 2 * i + j] = t4(coeff.D[e], i, j, 0, a1) * m0 + t4(coeff.D[e], i, j, 1, a1) * m1;
      }
      store_vector_field(out.data, moisture ? cs::F(a1, 0) : cs::W(a1, 0), solve_weak(cell, ops.elastic, 2, f2, q4));
    }
    store_vector_field(out.data, cs::Z(a1, 0), direct.ZG(a1, false));
    store_vector_field(out.data, cs::G(a1, 0), direct.ZG(a1, true));
  }
  return out;
}

}  // namespace homs
