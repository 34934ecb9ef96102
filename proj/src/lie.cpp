#include "fibersys/lie.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>

namespace fibersys {

namespace {

Vec flatten(const Mat& m) { return Eigen::Map<const Vec>(m.data(), m.size()); }

}  // namespace

// ---------------------------------------------------------------------------
// LieAlgebra

LieAlgebra::LieAlgebra(int dim) : dim_(dim), c_(static_cast<std::size_t>(dim) * dim * dim, 0.0) {
  if (dim < 0) throw DimensionMismatch("negative Lie algebra dimension");
}

LieAlgebra::LieAlgebra(int dim, std::vector<double> structure) : dim_(dim), c_(std::move(structure)) {
  if (dim < 0 || c_.size() != static_cast<std::size_t>(dim) * dim * dim) {
    throw DimensionMismatch("structure constants must have dim^3 entries");
  }
}

LieAlgebra LieAlgebra::so3() {
  std::vector<double> c(27, 0.0);
  auto set = [&c](int i, int j, int k, double v) {
    c[(i * 3 + j) * 3 + k] = v;
    c[(j * 3 + i) * 3 + k] = -v;
  };
  set(0, 1, 2, 1.0);
  set(1, 2, 0, 1.0);
  set(2, 0, 1, 1.0);
  return LieAlgebra(3, std::move(c));
}

LieAlgebra LieAlgebra::from_matrices(const std::vector<Mat>& generators, double gate) {
  const auto d = static_cast<int>(generators.size());
  if (d == 0) return LieAlgebra(0);
  Mat basis(generators.front().size(), d);
  for (int i = 0; i < d; ++i) basis.col(i) = flatten(generators[i]);
  const auto qr = basis.colPivHouseholderQr();
  if (qr.rank() < d) throw BasisProjectionError("generators are linearly dependent", 0.0);
  std::vector<double> c(static_cast<std::size_t>(d) * d * d, 0.0);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      const Vec comm = flatten(generators[i] * generators[j] - generators[j] * generators[i]);
      const Vec coords = qr.solve(comm);
      const double residual = (basis * coords - comm).norm();
      if (residual > gate) throw BasisProjectionError("generator span is not closed under commutators", residual);
      for (int k = 0; k < d; ++k) c[(i * d + j) * d + k] = coords(k);
    }
  }
  return LieAlgebra(d, std::move(c));
}

Vec LieAlgebra::bracket(const Vec& v, const Vec& w) const {
  if (v.size() != dim_ || w.size() != dim_) throw DimensionMismatch("bracket arguments must have the algebra dimension");
  Vec out = Vec::Zero(dim_);
  for (int i = 0; i < dim_; ++i) {
    if (v(i) == 0.0) continue;
    for (int j = 0; j < dim_; ++j) {
      const double vw = v(i) * w(j);
      if (vw == 0.0) continue;
      for (int k = 0; k < dim_; ++k) out(k) += vw * structure(i, j, k);
    }
  }
  return out;
}

Mat LieAlgebra::ad(const Vec& v) const {
  Mat m(dim_, dim_);
  for (int j = 0; j < dim_; ++j) m.col(j) = bracket(v, Vec::Unit(dim_, j));
  return m;
}

double LieAlgebra::antisymmetry_residual() const {
  double worst = 0.0;
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j)
      for (int k = 0; k < dim_; ++k) worst = std::max(worst, std::abs(structure(i, j, k) + structure(j, i, k)));
  return worst;
}

double LieAlgebra::jacobi_residual() const {
  double worst = 0.0;
  for (int i = 0; i < dim_; ++i) {
    for (int j = 0; j < dim_; ++j) {
      for (int k = 0; k < dim_; ++k) {
        const Vec ei = Vec::Unit(dim_, i);
        const Vec ej = Vec::Unit(dim_, j);
        const Vec ek = Vec::Unit(dim_, k);
        const Vec cyc = bracket(ei, bracket(ej, ek)) + bracket(ej, bracket(ek, ei)) + bracket(ek, bracket(ei, ej));
        worst = std::max(worst, cyc.cwiseAbs().maxCoeff());
      }
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Groups

GroupElement::GroupElement(Mat matrix, GroupKind kind) : g_(std::move(matrix)), kind_(kind) {
  if (g_.rows() != g_.cols()) throw DimensionMismatch("group elements are square matrices");
}

GroupElement GroupElement::identity(int n, GroupKind kind) { return GroupElement(Mat::Identity(n, n), kind); }

GroupElement GroupElement::from_acting(const Mat& acting, GroupKind kind) {
  return GroupElement(acting.inverse(), kind);
}

Mat GroupElement::acting() const { return inverse().g_; }

GroupElement GroupElement::inverse() const {
  if (kind_ == GroupKind::Rotation) return GroupElement(g_.transpose(), kind_);
  if (kind_ == GroupKind::Affine) {
    const auto n = static_cast<int>(g_.rows()) - 1;
    Mat inv = Mat::Identity(n + 1, n + 1);
    const Mat lin_inv = g_.topLeftCorner(n, n).inverse();
    inv.topLeftCorner(n, n) = lin_inv;
    inv.topRightCorner(n, 1) = -lin_inv * g_.topRightCorner(n, 1);
    return GroupElement(inv, kind_);
  }
  return GroupElement(g_.inverse(), kind_);
}

GroupElement GroupElement::operator*(const GroupElement& other) const {
  if (other.size() != size()) throw DimensionMismatch("group product of different sizes");
  return GroupElement(g_ * other.g_, kind_);
}

double GroupElement::membership_residual() const {
  const auto n = static_cast<int>(g_.rows());
  switch (kind_) {
    case GroupKind::Rotation:
      return (g_.transpose() * g_ - Mat::Identity(n, n)).norm() + std::abs(g_.determinant() - 1.0);
    case GroupKind::Affine: {
      Vec last = Vec::Zero(n);
      last(n - 1) = 1.0;
      return (g_.row(n - 1).transpose() - last).norm();
    }
    case GroupKind::General:
      return std::abs(g_.determinant()) > 0.0 ? 0.0 : 1.0;
  }
  return 0.0;
}

GroupElement GroupElement::projected() const {
  const auto n = static_cast<int>(g_.rows());
  if (kind_ == GroupKind::Rotation) {
    Eigen::JacobiSVD<Mat> svd(g_, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return GroupElement(svd.matrixU() * svd.matrixV().transpose(), kind_);
  }
  if (kind_ == GroupKind::Affine) {
    Mat p = g_;
    p.row(n - 1).setZero();
    p(n - 1, n - 1) = 1.0;
    return GroupElement(p, kind_);
  }
  return *this;
}

Mat matrix_exp(const Mat& a) { return a.exp(); }

Mat matrix_log(const Mat& g) { return g.log(); }

GroupElement exp(const Mat& algebra_matrix, GroupKind kind) { return GroupElement(matrix_exp(algebra_matrix), kind); }

// ---------------------------------------------------------------------------
// Representation

Representation::Representation(std::vector<Mat> a, std::vector<Vec> b, GroupKind kind)
    : a_(std::move(a)), b_(std::move(b)), kind_(kind) {
  if (a_.empty()) throw DimensionMismatch("a representation needs at least one generator");
  if (a_.size() != b_.size()) throw DimensionMismatch("one offset per generator matrix is required");
  fiber_dim_ = static_cast<int>(a_.front().rows());
  linear_ = true;
  for (std::size_t i = 0; i < a_.size(); ++i) {
    if (a_[i].rows() != fiber_dim_ || a_[i].cols() != fiber_dim_ || b_[i].size() != fiber_dim_) {
      throw DimensionMismatch("representation matrices must all be k x k with k-vectors as offsets");
    }
    if (!b_[i].isZero(0.0)) linear_ = false;
  }
  if (!linear_ && kind_ == GroupKind::Rotation) {
    throw DimensionMismatch("affine offsets are not compatible with a rotation group");
  }
  const int n = matrix_size();
  basis_.resize(static_cast<Eigen::Index>(n) * n, algebra_dim());
  for (int i = 0; i < algebra_dim(); ++i) basis_.col(i) = flatten(augmented_field(Vec::Unit(algebra_dim(), i)));
}

Representation Representation::linear(std::vector<Mat> a, GroupKind kind) {
  std::vector<Vec> b;
  b.reserve(a.size());
  for (const Mat& m : a) b.push_back(Vec::Zero(m.rows()));
  return Representation(std::move(a), std::move(b), kind);
}

Mat Representation::field_matrix(const Vec& v) const {
  if (v.size() != algebra_dim()) throw DimensionMismatch("algebra vector has the wrong dimension");
  Mat m = Mat::Zero(fiber_dim_, fiber_dim_);
  for (int i = 0; i < algebra_dim(); ++i) m += v(i) * a_[i];
  return m;
}

Vec Representation::field_offset(const Vec& v) const {
  if (v.size() != algebra_dim()) throw DimensionMismatch("algebra vector has the wrong dimension");
  Vec o = Vec::Zero(fiber_dim_);
  for (int i = 0; i < algebra_dim(); ++i) o += v(i) * b_[i];
  return o;
}

Mat Representation::augmented_field(const Vec& v) const {
  if (linear_) return field_matrix(v);
  Mat m = Mat::Zero(fiber_dim_ + 1, fiber_dim_ + 1);
  m.topLeftCorner(fiber_dim_, fiber_dim_) = field_matrix(v);
  m.topRightCorner(fiber_dim_, 1) = field_offset(v);
  return m;
}

Mat Representation::generator(const Vec& v) const { return -augmented_field(v); }

Vec Representation::eval(const Vec& v, const Vec& s) const {
  if (s.size() != fiber_dim_) throw DimensionMismatch("fiber point has the wrong dimension");
  return field_matrix(v) * s + field_offset(v);
}

Vec Representation::apply_acting(const Mat& acting, const Vec& s) const {
  if (s.size() != fiber_dim_) throw DimensionMismatch("fiber point has the wrong dimension");
  if (acting.rows() != matrix_size()) throw DimensionMismatch("acting matrix has the wrong size");
  if (linear_) return acting * s;
  return acting.topLeftCorner(fiber_dim_, fiber_dim_) * s + acting.topRightCorner(fiber_dim_, 1);
}

Vec Representation::act(const GroupElement& g, const Vec& s) const { return apply_acting(g.acting(), s); }

Vec Representation::field_coordinates(const Mat& field, double& residual) const {
  if (field.rows() != matrix_size() || field.cols() != matrix_size()) {
    throw DimensionMismatch("field matrix has the wrong size");
  }
  const Vec target = flatten(field);
  const Vec coords = basis_.colPivHouseholderQr().solve(target);
  residual = (basis_ * coords - target).norm();
  return coords;
}

LieAlgebra Representation::algebra() const {
  std::vector<Mat> gens;
  gens.reserve(a_.size());
  for (int i = 0; i < algebra_dim(); ++i) gens.push_back(generator(Vec::Unit(algebra_dim(), i)));
  return LieAlgebra::from_matrices(gens);
}

VectorField fundamental_field(const Representation& rep, const Vec& v) {
  if (v.size() != rep.algebra_dim()) throw DimensionMismatch("fundamental_field: algebra vector has the wrong dimension");
  return VectorField::affine(rep.field_matrix(v), rep.field_offset(v));
}

Vec Ad(const Representation& rep, const GroupElement& g, const Vec& v, double gate) {
  if (g.size() != rep.matrix_size()) throw DimensionMismatch("Ad: group element does not match the representation");
  // g M(v) g^{-1} = -(g A(v) g^{-1}); coordinates in the M basis equal those of
  // g A(v) g^{-1} in the A basis.
  const Mat conj = g.matrix() * rep.augmented_field(v) * g.inverse().matrix();
  double residual = 0.0;
  Vec w = rep.field_coordinates(conj, residual);
  if (residual > gate) throw BasisProjectionError("Ad(g) v left the algebra", residual);
  return w;
}

GroupPath integrate_left_invariant(const Representation& rep, const std::function<Vec(double)>& xi, double t0,
                                   double t1, int steps, const GroupElement& start, double blowup_bound) {
  if (steps < 1) throw DomainError("integrate_left_invariant needs at least one step");
  if (start.size() != rep.matrix_size()) throw DimensionMismatch("start element does not match the representation");
  const GroupKind kind = start.kind();
  auto rhs = [&](double t, const Mat& g) -> Mat { return g * rep.generator(xi(t)); };
  GroupPath path;
  path.times.reserve(steps + 1);
  path.elements.reserve(steps + 1);
  path.times.push_back(t0);
  path.elements.push_back(start);
  Mat g = start.matrix();
  const double h = (t1 - t0) / steps;
  for (int i = 0; i < steps; ++i) {
    const double t = t0 + i * h;
    const Mat k1 = rhs(t, g);
    const Mat k2 = rhs(t + 0.5 * h, g + 0.5 * h * k1);
    const Mat k3 = rhs(t + 0.5 * h, g + 0.5 * h * k2);
    const Mat k4 = rhs(t + h, g + h * k3);
    g = GroupElement(g + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), kind).projected().matrix();
    if (!g.allFinite() || g.cwiseAbs().maxCoeff() > blowup_bound) {
      throw EscapeDetected(t, Eigen::Map<const Vec>(path.elements.back().matrix().data(), g.size()));
    }
    path.times.push_back(i + 1 == steps ? t1 : t + h);
    path.elements.emplace_back(g, kind);
  }
  return path;
}

GroupPath integrate_left_invariant(const Representation& rep, const std::function<Vec(double)>& xi, double t1,
                                   int steps) {
  return integrate_left_invariant(rep, xi, 0.0, t1, steps, GroupElement::identity(rep.matrix_size(), rep.group_kind()));
}

Mat so3_generator(int i) {
  Mat l = Mat::Zero(3, 3);
  switch (i) {
    case 0:
      l(2, 1) = 1.0;
      l(1, 2) = -1.0;
      break;
    case 1:
      l(0, 2) = 1.0;
      l(2, 0) = -1.0;
      break;
    case 2:
      l(1, 0) = 1.0;
      l(0, 1) = -1.0;
      break;
    default:
      throw DimensionMismatch("so(3) has three generators");
  }
  return l;
}

Mat rotation_generator_2d() {
  Mat j(2, 2);
  j << 0.0, -1.0, 1.0, 0.0;
  return j;
}

}  // namespace fibersys
