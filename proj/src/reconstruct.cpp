#include "homs/reconstruct.hpp"

#include <sstream>

namespace homs {

const char* order_name(Order o) {
  switch (o) {
    case Order::Homogenized: return "homogenized";
    case Order::Loms: return "loms";
    case Order::Homs: return "homs";
  }
  return "?";
}

namespace {

// Macro fields and recovered derivatives at one point.
struct MacroSample {
  double T = 0, c = 0;
  Eigen::Vector2d u = Eigen::Vector2d::Zero();
  Eigen::Vector2d dT = Eigen::Vector2d::Zero(), dc = Eigen::Vector2d::Zero();
  Mat2 du = Mat2::Zero();  // du(h, a) = ∂u_h/∂x_a
  Mat2 hT = Mat2::Zero(), hc = Mat2::Zero();
  std::array<Mat2, 2> hu{Mat2::Zero(), Mat2::Zero()};
};

MacroSample sample_macro(const MacroSolution& m, const Eigen::Vector2d& x, Order order) {
  MacroSample s;
  Eigen::Vector3d bary;
  const int e = m.T.mesh->locate(x, bary);
  const auto& el = m.T.mesh->elements[e];
  auto interp = [&](const FieldSolution& f, int c) {
    return bary[0] * f.value(el[0], c) + bary[1] * f.value(el[1], c) + bary[2] * f.value(el[2], c);
  };
  auto interp_row = [&](const Eigen::MatrixXd& M, int comps, int c, int col) {
    return bary[0] * M(el[0] * comps + c, col) + bary[1] * M(el[1] * comps + c, col) +
           bary[2] * M(el[2] * comps + c, col);
  };
  s.T = interp(m.T, 0);
  s.c = interp(m.c, 0);
  s.u = {interp(m.u, 0), interp(m.u, 1)};
  if (order == Order::Homogenized) return s;
  for (int a = 0; a < 2; ++a) {
    s.dT[a] = interp_row(*m.T.gradient, 1, 0, a);
    s.dc[a] = interp_row(*m.c.gradient, 1, 0, a);
    for (int h = 0; h < 2; ++h) s.du(h, a) = interp_row(*m.u.gradient, 2, h, a);
  }
  if (order != Order::Homs) return s;
  for (int a1 = 0; a1 < 2; ++a1)
    for (int a2 = 0; a2 < 2; ++a2) {
      s.hT(a1, a2) = interp_row(*m.T.hessian, 1, 0, 2 * a1 + a2);
      s.hc(a1, a2) = interp_row(*m.c.hessian, 1, 0, 2 * a1 + a2);
      for (int h = 0; h < 2; ++h) s.hu[h](a1, a2) = interp_row(*m.u.hessian, 2, h, 2 * a1 + a2);
    }
  return s;
}

void check_inputs(const ReconstructionInputs& in) {
  if (!in.fine || !in.macro) throw ReconstructionError("reconstruction needs a fine mesh and a macro solution");
  const Box box{in.fine->grid.origin,
                in.fine->grid.origin + in.fine->grid.spacing.cwiseProduct(
                                           Eigen::Vector2d(in.fine->grid.cells[0], in.fine->grid.cells[1]))};
  std::array<int, 2> n;
  try {
    n = cells_per_axis(box, in.epsilon);
  } catch (const MeshError& e) {
    throw ReconstructionError(std::string("epsilon does not match the fine mesh: ") + e.what());
  }
  for (int d = 0; d < 2; ++d)
    if (in.fine->grid.cells[d] % n[d] != 0 || in.fine->grid.cells[d] / n[d] != in.fine->grid.pattern_period)
      throw ReconstructionError("epsilon does not match the fine mesh cell structure");
  const MacroSolution& m = *in.macro;
  if (in.order != Order::Homogenized && (!m.T.gradient || !m.c.gradient || !m.u.gradient))
    throw ReconstructionError("macro gradients missing: call prepare_macro_derivatives first");
  if (in.order == Order::Homs && (!m.T.hessian || !m.c.hessian || !m.u.hessian))
    throw ReconstructionError("macro Hessians missing: call prepare_macro_derivatives first");
}

MacroSolution empty_output(const ReconstructionInputs& in) {
  const int n = in.fine->num_nodes();
  MacroSolution out;
  out.T = make_field(in.fine, 1, Vec::Zero(n));
  out.c = make_field(in.fine, 1, Vec::Zero(n));
  out.u = make_field(in.fine, 2, Vec::Zero(2 * n));
  return out;
}

// P1 value of every column of `data` at the cell point (element el, bary),
// accumulated with weight w.
void accumulate(const Eigen::MatrixXd& data, const std::array<int, 3>& el, const Eigen::Vector3d& bary, double w,
                Eigen::VectorXd& out) {
  for (int a = 0; a < 3; ++a) out.noalias() += (w * bary[a]) * data.row(el[a]).transpose();
}

}  // namespace

MacroSolution reconstruct(const ReconstructionInputs& in, const CellSetGrid& sets) {
  check_inputs(in);
  if (in.order == Order::Homs && sets.second.size() != sets.first.size())
    throw ReconstructionError("second-order cell sets are required for HOMS");
  MacroSolution out = empty_output(in);
  const UnitCellMesh& cell = *sets.cell;
  const double eps = in.epsilon;
  Eigen::VectorXd f1(col::kFirst), f2(col::kSecond);
  std::array<RepresentativeGrid::Weight, 4> w;
  for (int v = 0; v < in.fine->num_nodes(); ++v) {
    const Eigen::Vector2d& x = in.fine->nodes[v];
    const MacroSample s = sample_macro(*in.macro, x, in.order);
    double T = s.T, c = s.c;
    Eigen::Vector2d u = s.u;
    if (in.order != Order::Homogenized) {
      Eigen::Vector3d bary;
      const int ce = cell.locate(micro_coordinate(x, eps), bary);
      const auto& el = cell.elements[ce];
      const int nw = sets.grid.weights(x, w);
      f1.setZero();
      f2.setZero();
      for (int i = 0; i < nw; ++i) {
        accumulate(sets.first[w[i].index].data, el, bary, w[i].w, f1);
        if (in.order == Order::Homs) accumulate(sets.second[w[i].index].data, el, bary, w[i].w, f2);
      }
      double t1 = 0, c1 = 0;
      Eigen::Vector2d u1 = Eigen::Vector2d::Zero();
      for (int a = 0; a < 2; ++a) {
        t1 += f1[col::H(a)] * s.dT[a];
        c1 += f1[col::L(a)] * s.dc[a];
      }
      for (int i = 0; i < 2; ++i) {
        for (int a1 = 0; a1 < 2; ++a1)
          for (int h = 0; h < 2; ++h) u1[i] += f1[col::X(a1, h, i)] * s.du(h, a1);
        u1[i] -= f1[col::M(i)] * s.T + f1[col::N(i)] * s.c;
      }
      T += eps * t1;
      c += eps * c1;
      u += eps * u1;
      if (in.order == Order::Homs) {
        double t2 = 0, c2 = 0;
        Eigen::Vector2d u2 = Eigen::Vector2d::Zero();
        for (int a1 = 0; a1 < 2; ++a1) {
          for (int a2 = 0; a2 < 2; ++a2) {
            t2 += f2[col::H2(a1, a2)] * s.hT(a1, a2);
            c2 += f2[col::L2(a1, a2)] * s.hc(a1, a2);
          }
          t2 += f2[col::R(a1)] * s.dT[a1];
          c2 += f2[col::S(a1)] * s.dc[a1];
        }
        for (int i = 0; i < 2; ++i) {
          for (int a1 = 0; a1 < 2; ++a1) {
            for (int h = 0; h < 2; ++h) {
              for (int a2 = 0; a2 < 2; ++a2) u2[i] += f2[col::P(a1, a2, h, i)] * s.hu[h](a1, a2);
              u2[i] += f2[col::Q(a1, h, i)] * s.du(h, a1);
            }
            u2[i] += f2[col::Z(a1, i)] * s.dT[a1] + f2[col::G(a1, i)] * s.dc[a1];
          }
          u2[i] += f2[col::W(i)] * s.T + f2[col::F(i)] * s.c;
        }
        T += eps * eps * t2;
        c += eps * eps * c2;
        u += eps * eps * u2;
      }
    }
    out.T.values[v] = T;
    out.c.values[v] = c;
    out.u.values[2 * v] = u[0];
    out.u.values[2 * v + 1] = u[1];
  }
  return out;
}

MacroSolution reconstruct_separated(const ReconstructionInputs& in, const SeparatedCellData& data) {
  check_inputs(in);
  MacroSolution out = empty_output(in);
  const UnitCellMesh& cell = *data.cell;
  const double eps = in.epsilon;
  Eigen::VectorXd f1(col::kFirst), f2(col::star::kCount);
  namespace cs = col::star;
  for (int v = 0; v < in.fine->num_nodes(); ++v) {
    const Eigen::Vector2d& x = in.fine->nodes[v];
    const MacroSample s = sample_macro(*in.macro, x, in.order);
    double T = s.T, c = s.c;
    Eigen::Vector2d u = s.u;
    if (in.order != Order::Homogenized) {
      const double om = data.omega.value(x);
      Eigen::Vector3d bary;
      const int ce = cell.locate(micro_coordinate(x, eps), bary);
      const auto& el = cell.elements[ce];
      f1.setZero();
      accumulate(data.first.data, el, bary, 1.0, f1);
      double t1 = 0, c1 = 0;
      Eigen::Vector2d u1 = Eigen::Vector2d::Zero();
      for (int a = 0; a < 2; ++a) {
        t1 += f1[col::H(a)] * s.dT[a];
        c1 += f1[col::L(a)] * s.dc[a];
      }
      for (int i = 0; i < 2; ++i) {
        for (int a1 = 0; a1 < 2; ++a1)
          for (int h = 0; h < 2; ++h) u1[i] += f1[col::X(a1, h, i)] * s.du(h, a1);
        u1[i] -= om * (f1[col::M(i)] * s.T + f1[col::N(i)] * s.c);
      }
      T += eps * t1;
      c += eps * c1;
      u += eps * u1;
      if (in.order == Order::Homs) {
        if (om == 0.0) {
          std::ostringstream os;
          os << "omega vanishes at x = (" << x.x() << ", " << x.y() << ")";
          throw ReconstructionError(os.str());
        }
        const Eigen::Vector2d dw = data.omega.gradient(x);
        f2.setZero();
        accumulate(data.second.data, el, bary, 1.0, f2);
        double t2 = 0, c2 = 0;
        Eigen::Vector2d u2 = Eigen::Vector2d::Zero();
        for (int a1 = 0; a1 < 2; ++a1)
          for (int a2 = 0; a2 < 2; ++a2) {
            t2 += f2[cs::H2(a1, a2)] * s.hT(a1, a2) + dw[a2] / om * f2[cs::R(a1, a2)] * s.dT[a1];
            c2 += f2[cs::L2(a1, a2)] * s.hc(a1, a2) + dw[a2] / om * f2[cs::S(a1, a2)] * s.dc[a1];
          }
        for (int i = 0; i < 2; ++i) {
          for (int a1 = 0; a1 < 2; ++a1) {
            for (int h = 0; h < 2; ++h)
              for (int a2 = 0; a2 < 2; ++a2)
                u2[i] += f2[cs::P(a1, a2, h, i)] * s.hu[h](a1, a2) +
                         dw[a2] / om * f2[cs::Q(a1, a2, h, i)] * s.du(h, a1);
            u2[i] += dw[a1] * f2[cs::W(a1, i)] * s.T + om * f2[cs::Z(a1, i)] * s.dT[a1] +
                     dw[a1] * f2[cs::F(a1, i)] * s.c + om * f2[cs::G(a1, i)] * s.dc[a1];
          }
        }
        T += eps * eps * t2;
        c += eps * eps * c2;
        u += eps * eps * u2;
      }
    }
    out.T.values[v] = T;
    out.c.values[v] = c;
    out.u.values[2 * v] = u[0];
    out.u.values[2 * v + 1] = u[1];
  }
  return out;
}

}  // namespace homs
