#include "homs/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "homs/hash.hpp"

namespace homs {

Mat2 contract(const Tensor4& D, const Mat2& A) {
  Mat2 r = Mat2::Zero();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) r(i, j) += t4(D, i, j, k, l) * A(k, l);
  return r;
}

Eigen::Matrix3d voigt(const Tensor4& D) {
  static const int vi[3][2] = {{0, 0}, {1, 1}, {0, 1}};
  Eigen::Matrix3d C;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) C(a, b) = t4(D, vi[a][0], vi[a][1], vi[b][0], vi[b][1]);
  return C;
}

Tensor4 plane_strain(double E, double nu) {
  const double lambda = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
  const double mu = E / (2.0 * (1.0 + nu));
  Tensor4 D = Tensor4::Zero();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l)
          t4(D, i, j, k, l) = lambda * (i == j) * (k == l) + mu * ((i == k) * (j == l) + (i == l) * (j == k));
  return D;
}

double symmetry_defect(const Mat2& A) { return std::abs(A(0, 1) - A(1, 0)); }

double symmetry_defect(const Tensor4& D) {
  double d = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) {
          const double v = t4(D, i, j, k, l);
          d = std::max({d, std::abs(v - t4(D, j, i, k, l)), std::abs(v - t4(D, i, j, l, k)),
                        std::abs(v - t4(D, k, l, i, j))});
        }
  return d;
}

const char* family_name(Family f) {
  switch (f) {
    case Family::E: return "E";
    case Family::Nu: return "nu";
    case Family::K: return "k";
    case Family::G: return "g";
    case Family::Alpha: return "alpha";
    case Family::Beta: return "beta";
  }
  return "?";
}

double PhaseProperties::get(Family f) const {
  switch (f) {
    case Family::E: return E;
    case Family::Nu: return nu;
    case Family::K: return k;
    case Family::G: return g;
    case Family::Alpha: return alpha;
    case Family::Beta: return beta;
  }
  return 0.0;
}

void PhaseProperties::set(Family f, double v) {
  switch (f) {
    case Family::E: E = v; break;
    case Family::Nu: nu = v; break;
    case Family::K: k = v; break;
    case Family::G: g = v; break;
    case Family::Alpha: alpha = v; break;
    case Family::Beta: beta = v; break;
  }
}

double MaterialModel::factor(Family f, const Eigen::Vector2d& x) const {
  const MacroFactor& m = factors[static_cast<int>(f)];
  if (m.scale == 0.0) return m.offset;
  return m.offset + m.scale * weight.value(x);
}

PhaseProperties MaterialModel::scalars(const Eigen::Vector2d& x, Phase phase) const {
  const PhaseProperties& micro = (phase == Phase::Inclusion) ? inclusion : matrix;
  PhaseProperties out;
  for (int i = 0; i < kFamilies; ++i) {
    const auto f = static_cast<Family>(i);
    switch (mode) {
      case CouplingMode::Product: out.set(f, factor(f, x) * micro.get(f)); break;
      case CouplingMode::Sum: out.set(f, factor(f, x) + micro.get(f)); break;
      case CouplingMode::General:
        if (!combiner) throw std::invalid_argument("general coupling mode needs a combiner");
        out.set(f, combiner(f, x, micro.get(f)));
        break;
    }
  }
  return out;
}

std::uint64_t MaterialModel::hash() const {
  Fnv1a h;
  h.pod(static_cast<int>(mode));
  for (int i = 0; i < kFamilies; ++i) {
    h.pod(matrix.get(static_cast<Family>(i)));
    h.pod(inclusion.get(static_cast<Family>(i)));
    h.pod(factors[i].offset);
    h.pod(factors[i].scale);
  }
  h.pod(geometry.inclusion.has_value());
  if (geometry.inclusion) {
    h.pod(geometry.inclusion->center.x());
    h.pod(geometry.inclusion->center.y());
    h.pod(geometry.inclusion->radius);
  }
  h.str(weight.text());
  return h.value();
}

MaterialModel example1_model() {
  MaterialModel m;
  m.mode = CouplingMode::Product;
  m.matrix = {10.0, 0.30, 100.0, 1.0, 10.0, 1.0};
  m.inclusion = {1.0, 0.25, 1.0, 0.02, 0.1, 0.02};
  m.geometry.inclusion = Circle{};
  m.weight = weight_from_catalog("example1");
  for (auto& f : m.factors) f = {0.0, 1.0};
  m.factors[static_cast<int>(Family::Nu)] = {1.0, 0.0};
  return m;
}

MaterialModel coupled_model() {
  MaterialModel m = example1_model();
  m.mode = CouplingMode::Sum;
  m.weight = weight_from_catalog("example1_coupled");
  m.factors[static_cast<int>(Family::E)] = {0.0, 0.5};
  m.factors[static_cast<int>(Family::Nu)] = {0.0, 0.0};
  m.factors[static_cast<int>(Family::K)] = {0.0, 0.005};
  m.factors[static_cast<int>(Family::G)] = {0.0, 0.01};
  m.factors[static_cast<int>(Family::Alpha)] = {0.0, 0.005};
  m.factors[static_cast<int>(Family::Beta)] = {0.0, 0.01};
  return m;
}

MaterialModel constant_model(const PhaseProperties& p) {
  MaterialModel m;
  m.mode = CouplingMode::Product;
  m.matrix = p;
  m.inclusion = p;
  m.weight = Expression(1.0);
  for (auto& f : m.factors) f = {1.0, 0.0};
  return m;
}

CoefficientBundle bundle_from_scalars(const PhaseProperties& p) {
  CoefficientBundle b;
  b.k = p.k * Mat2::Identity();
  b.g = p.g * Mat2::Identity();
  b.alpha = p.alpha * Mat2::Identity();
  b.beta = p.beta * Mat2::Identity();
  b.D = plane_strain(p.E, p.nu);
  return b;
}

namespace {

void check_elliptic(const PhaseProperties& p, const Eigen::Vector2d& x, Phase phase) {
  auto fail = [&](const std::string& what, double v) {
    std::ostringstream os;
    os << "ellipticity violated: " << what << " = " << v << " at x = (" << x.x() << ", " << x.y() << ") in "
       << (phase == Phase::Inclusion ? "inclusion" : "matrix");
    throw EllipticityError(os.str());
  };
  if (!(p.k > 0.0)) fail("k", p.k);
  if (!(p.g > 0.0)) fail("g", p.g);
  if (!(p.E > 0.0)) fail("E", p.E);
  if (!(p.nu > -1.0 && p.nu < 0.5)) fail("nu", p.nu);
  // zero expansion is allowed (decoupled runs), negative is not
  if (p.alpha < 0.0) fail("alpha", p.alpha);
  if (p.beta < 0.0) fail("beta", p.beta);
}

}  // namespace

CoefficientBundle evaluate_phase(const MaterialModel& model, const Eigen::Vector2d& x, Phase phase) {
  const PhaseProperties p = model.scalars(x, phase);
  check_elliptic(p, x, phase);
  return bundle_from_scalars(p);
}

CoefficientBundle evaluate(const MaterialModel& model, const Eigen::Vector2d& x, const Eigen::Vector2d& y) {
  return evaluate_phase(model, x, model.geometry.phase_at(y));
}

AssumptionReport validate_assumptions(const MaterialModel& model, const std::vector<Eigen::Vector2d>& x_samples,
                                      const std::vector<Eigen::Vector2d>& y_samples) {
  AssumptionReport r;
  const double inf = std::numeric_limits<double>::infinity();
  r.min_eig_k = r.min_eig_g = r.min_eig_alpha = r.min_eig_beta = r.min_eig_D = inf;
  if (x_samples.empty() || y_samples.empty()) {
    r.min_eig_k = r.min_eig_g = r.min_eig_alpha = r.min_eig_beta = r.min_eig_D = std::nan("");
    return r;
  }
  auto min_eig = [](const Mat2& A) {
    return Eigen::SelfAdjointEigenSolver<Mat2>(0.5 * (A + A.transpose()), Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
  };
  for (const auto& x : x_samples) {
    for (const auto& y : y_samples) {
      const Phase ph = model.geometry.phase_at(y);
      const CoefficientBundle b = bundle_from_scalars(model.scalars(x, ph));
      r.min_eig_k = std::min(r.min_eig_k, min_eig(b.k));
      r.min_eig_g = std::min(r.min_eig_g, min_eig(b.g));
      r.min_eig_alpha = std::min(r.min_eig_alpha, min_eig(b.alpha));
      r.min_eig_beta = std::min(r.min_eig_beta, min_eig(b.beta));
      const Eigen::Matrix3d C = voigt(b.D);
      const double dmin = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(0.5 * (C + C.transpose()), Eigen::EigenvaluesOnly)
                              .eigenvalues()
                              .minCoeff();
      // plane strain with nu >= 0.5 gives non-finite entries
      r.min_eig_D = std::isfinite(dmin) ? std::min(r.min_eig_D, dmin) : -inf;
      r.symmetry_defect = std::max({r.symmetry_defect, symmetry_defect(b.k), symmetry_defect(b.g),
                                    symmetry_defect(b.alpha), symmetry_defect(b.beta), symmetry_defect(b.D)});
    }
  }
  return r;
}

bool is_separable(const MaterialModel& model) {
  if (model.mode != CouplingMode::Product) return false;
  for (int i = 0; i < kFamilies; ++i) {
    const MacroFactor& f = model.factors[i];
    if (static_cast<Family>(i) == Family::Nu) {
      if (f.scale != 0.0) return false;
    } else if (f.offset != 0.0 && !model.weight.is_constant()) {
      return false;
    }
  }
  return true;
}

SeparatedModel separate(const MaterialModel& model) {
  if (!is_separable(model))
    throw std::invalid_argument("material model is not of the form omega(x) * a*(y)");
  SeparatedModel s;
  const bool constant_weight = model.weight.is_constant();
  s.omega = constant_weight ? Expression(1.0) : model.weight;
  s.star = model;
  s.star.weight = Expression(1.0);
  const double w0 = constant_weight ? model.weight.value(Eigen::Vector2d::Zero()) : 1.0;
  for (int i = 0; i < kFamilies; ++i) {
    const auto f = static_cast<Family>(i);
    const MacroFactor& mf = model.factors[i];
    double c = 0.0;
    if (f == Family::Nu) c = mf.offset;
    else if (constant_weight) c = mf.offset + mf.scale * w0;
    else c = mf.scale;
    s.star.matrix.set(f, c * model.matrix.get(f));
    s.star.inclusion.set(f, c * model.inclusion.get(f));
    s.star.factors[i] = {1.0, 0.0};
  }
  return s;
}

}  // namespace homs
