#include "homs/homogenize.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace homs {

HomogenizedTensors compute_homogenized(const UnitCellMesh& cell, const CellCoefficients& coeff,
                                       const FirstOrderCellSet& first) {
  if (first.data.rows() != cell.num_nodes() || first.data.cols() != col::kFirst ||
      coeff.k.size() != cell.elements.size())
    throw std::invalid_argument("cell set does not belong to this cell mesh");
  HomogenizedTensors t;
  const auto& d = first.data;
  double volume = 0.0;
  for (int e = 0; e < cell.num_elements(); ++e) {
    const auto G = cell.shape_gradients(e);
    const double w = cell.area(e);
    volume += w;
    const auto& el = cell.elements[e];
    auto grad = [&](int c) -> Eigen::Vector2d {
      return G.col(0) * d(el[0], c) + G.col(1) * d(el[1], c) + G.col(2) * d(el[2], c);
    };
    Mat2 gH, gL;  // column j = ∇H_j
    for (int j = 0; j < 2; ++j) {
      gH.col(j) = grad(col::H(j));
      gL.col(j) = grad(col::L(j));
    }
    t.k += w * (coeff.k[e] + coeff.k[e] * gH);
    t.g += w * (coeff.g[e] + coeff.g[e] * gL);
    const Tensor4& D = coeff.D[e];
    for (int l = 0; l < 2; ++l)
      for (int k = 0; k < 2; ++k) {
        Mat2 gX;  // gX(m, n) = ∂_n X^l_{mk}
        for (int m = 0; m < 2; ++m) gX.row(m) = grad(col::X(l, k, m)).transpose();
        const Mat2 s = contract(D, gX);
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) t4(t.D, i, j, k, l) += w * (t4(D, i, j, k, l) + s(i, j));
      }
    Mat2 gM, gN;
    for (int k = 0; k < 2; ++k) {
      gM.row(k) = grad(col::M(k)).transpose();
      gN.row(k) = grad(col::N(k)).transpose();
    }
    t.A += w * (coeff.Dalpha[e] + contract(D, gM));
    t.B += w * (coeff.Dbeta[e] + contract(D, gN));
  }
  // |Y| = 1 up to round-off; divide anyway
  t.k /= volume;
  t.g /= volume;
  t.D /= volume;
  t.A /= volume;
  t.B /= volume;
  return t;
}

HomogenizedTensors compute_homogenized(const UnitCellMesh& cell, const MaterialModel& model,
                                       const Eigen::Vector2d& x, const FirstOrderCellSet& first) {
  if ((first.x - x).norm() > 1e-12) throw std::invalid_argument("cell set was solved at a different macro point");
  return compute_homogenized(cell, cell_coefficients(cell, model, x), first);
}

RepresentativeGrid build_representative_grid(const Box& domain, std::array<int, 2> n_rep) {
  RepresentativeGrid g;
  g.domain = domain;
  g.n = n_rep;
  for (int d = 0; d < 2; ++d) {
    if (n_rep[d] < 1) throw std::invalid_argument("representative grid needs at least one point per axis");
    auto& c = g.coords[d];
    if (n_rep[d] == 1) {
      c = {0.5 * (domain.lo[d] + domain.hi[d])};
      g.spacing[d] = 0.0;
    } else {
      g.spacing[d] = (domain.hi[d] - domain.lo[d]) / (n_rep[d] - 1);
      for (int i = 0; i < n_rep[d]; ++i)
        c.push_back(i + 1 == n_rep[d] ? domain.hi[d] : domain.lo[d] + i * g.spacing[d]);
    }
  }
  return g;
}

int RepresentativeGrid::weights(const Eigen::Vector2d& x, std::array<Weight, 4>& out) const {
  int idx[2][2];
  double w[2][2];
  int cnt[2];
  for (int d = 0; d < 2; ++d) {
    if (n[d] == 1) {
      idx[d][0] = 0;
      w[d][0] = 1.0;
      cnt[d] = 1;
      continue;
    }
    const double p = std::clamp(x[d], coords[d].front(), coords[d].back());
    int s = static_cast<int>(std::floor((p - coords[d].front()) / spacing[d]));
    s = std::clamp(s, 0, n[d] - 2);
    const double t = std::clamp((p - coords[d][s]) / spacing[d], 0.0, 1.0);
    idx[d][0] = s;
    idx[d][1] = s + 1;
    w[d][0] = 1.0 - t;
    w[d][1] = t;
    cnt[d] = 2;
  }
  int m = 0;
  for (int b = 0; b < cnt[1]; ++b)
    for (int a = 0; a < cnt[0]; ++a) {
      const double ww = w[0][a] * w[1][b];
      if (ww == 0.0) continue;
      out[m++] = {index(idx[0][a], idx[1][b]), ww};
    }
  return m;
}

HomogenizedTensors interpolate_tensor(const HomogenizedField& field, const Eigen::Vector2d& x) {
  std::array<RepresentativeGrid::Weight, 4> w;
  const int m = field.grid.weights(x, w);
  HomogenizedTensors t;
  for (int i = 0; i < m; ++i) {
    const auto& v = field.values[w[i].index];
    t.k += w[i].w * v.k;
    t.g += w[i].w * v.g;
    t.D += w[i].w * v.D;
    t.A += w[i].w * v.A;
    t.B += w[i].w * v.B;
  }
  return t;
}

Eigen::MatrixXd interpolate_cell_function(const CellSetGrid& sets, const Eigen::Vector2d& x, bool second) {
  if (second && sets.second.empty()) throw std::invalid_argument("second-order cell sets were not computed");
  std::array<RepresentativeGrid::Weight, 4> w;
  const int m = sets.grid.weights(x, w);
  auto block = [&](int idx) -> const Eigen::MatrixXd& {
    return second ? sets.second[idx].data : sets.first[idx].data;
  };
  Eigen::MatrixXd out = w[0].w * block(w[0].index);
  for (int i = 1; i < m; ++i) out += w[i].w * block(w[i].index);
  return out;
}

void write_homogenized_csv(const std::string& path, const HomogenizedField& field) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out.precision(15);
  out << "x1,x2,k11,k22,k12,g11,g22,g12,D11,D12,D13,D22,D23,D33,A11,A22,A12,B11,B22,B12\n";
  for (int i = 0; i < field.grid.size(); ++i) {
    const auto p = field.grid.point(i);
    const auto& t = field.values[i];
    const Eigen::Matrix3d C = voigt(t.D);
    out << p.x() << ',' << p.y() << ',' << t.k(0, 0) << ',' << t.k(1, 1) << ',' << t.k(0, 1) << ',' << t.g(0, 0)
        << ',' << t.g(1, 1) << ',' << t.g(0, 1) << ',' << C(0, 0) << ',' << C(0, 1) << ',' << C(0, 2) << ','
        << C(1, 1) << ',' << C(1, 2) << ',' << C(2, 2) << ',' << t.A(0, 0) << ',' << t.A(1, 1) << ',' << t.A(0, 1)
        << ',' << t.B(0, 0) << ',' << t.B(1, 1) << ',' << t.B(0, 1) << '\n';
  }
}

}  // namespace homs
