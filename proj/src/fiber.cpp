#include "fibersys/fiber.hpp"

#include <cmath>

namespace fibersys {

FiberModel::FiberModel(FiberKind kind, int ambient_dim, Vec period)
    : kind_(kind), ambient_dim_(ambient_dim), period_(std::move(period)) {}

FiberModel FiberModel::euclidean(int dim) {
  if (dim < 1) throw DimensionMismatch("fiber dimension must be positive");
  return FiberModel(FiberKind::Euclidean, dim, Vec::Zero(dim));
}

FiberModel FiberModel::torus(const Vec& period) {
  if (period.size() < 1 || (period.array() <= 0.0).any()) throw DomainError("torus periods must be positive");
  return FiberModel(FiberKind::Torus, static_cast<int>(period.size()), period);
}

FiberModel FiberModel::sphere() { return FiberModel(FiberKind::Sphere, 3, Vec::Zero(3)); }

FiberModel FiberModel::restricted(std::function<bool(const Vec&)> predicate, std::string label, const Vec& sample_lo,
                                  const Vec& sample_hi) const {
  FiberModel out = *this;
  if (restriction_) {
    auto outer = restriction_;
    out.restriction_ = [outer, predicate](const Vec& s) { return outer(s) && predicate(s); };
    out.label_ = label_ + " & " + label;
  } else {
    out.restriction_ = std::move(predicate);
    out.label_ = std::move(label);
  }
  if (sample_lo.size() == ambient_dim_ && sample_hi.size() == ambient_dim_) {
    out.sample_lo_ = sample_lo;
    out.sample_hi_ = sample_hi;
  }
  return out;
}

FiberModel FiberModel::restricted_to_box(const Vec& lo, const Vec& hi) const {
  if (lo.size() != ambient_dim_ || hi.size() != ambient_dim_) throw DimensionMismatch("restriction box dimension");
  return restricted([lo, hi](const Vec& s) { return (s.array() > lo.array()).all() && (s.array() < hi.array()).all(); },
                    "box", lo, hi);
}

FiberModel FiberModel::restricted_to_ball(const Vec& center, double radius) const {
  if (center.size() != ambient_dim_) throw DimensionMismatch("restriction ball dimension");
  const Vec r = Vec::Constant(ambient_dim_, radius);
  return restricted([center, radius](const Vec& s) { return (s - center).norm() < radius; }, "ball", center - r,
                    center + r);
}

bool FiberModel::contains(const Vec& s) const {
  if (s.size() != ambient_dim_ || !s.allFinite()) return false;
  if (kind_ == FiberKind::Sphere && std::abs(s.norm() - 1.0) > 1e-6) return false;
  return !restriction_ || restriction_(s);
}

void FiberModel::normalize(Vec& s) const {
  if (kind_ == FiberKind::Sphere) {
    const double n = s.norm();
    if (n > 0.0) s /= n;
  } else if (kind_ == FiberKind::Torus) {
    for (int i = 0; i < ambient_dim_; ++i) s(i) -= period_(i) * std::floor(s(i) / period_(i));
  }
}

FlowDomain FiberModel::flow_domain() const {
  FiberModel self = *this;
  FlowDomain domain;
  domain.normalize = [self](Vec& s) { self.normalize(s); };
  if (restriction_) domain.contains = [self](const Vec& s) { return self.contains(s); };
  return domain;
}

Vec FiberModel::sample(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    Vec s(ambient_dim_);
    if (sample_lo_.size() == ambient_dim_) {
      for (int i = 0; i < ambient_dim_; ++i) s(i) = sample_lo_(i) + (sample_hi_(i) - sample_lo_(i)) * unit(rng);
    } else if (kind_ == FiberKind::Sphere) {
      for (int i = 0; i < 3; ++i) s(i) = gauss(rng);
      s.normalize();
    } else if (kind_ == FiberKind::Torus) {
      for (int i = 0; i < ambient_dim_; ++i) s(i) = period_(i) * unit(rng);
    } else {
      for (int i = 0; i < ambient_dim_; ++i) s(i) = -2.0 + 4.0 * unit(rng);
    }
    if (kind_ == FiberKind::Sphere && sample_lo_.size() == ambient_dim_) s.normalize();
    if (contains(s)) return s;
  }
  throw EmptyFiber("no fiber sample satisfies the restriction" + (label_.empty() ? "" : " (" + label_ + ")"));
}

Mat FiberModel::tangent_basis(const Vec& s) const {
  if (kind_ != FiberKind::Sphere) return Mat::Identity(ambient_dim_, ambient_dim_);
  const Eigen::Vector3d n = s.normalized();
  // Any vector not parallel to n seeds the frame.
  Eigen::Vector3d seed = std::abs(n.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
  const Eigen::Vector3d t1 = (seed - seed.dot(n) * n).normalized();
  const Eigen::Vector3d t2 = n.cross(t1);
  Mat basis(3, 2);
  basis.col(0) = t1;
  basis.col(1) = t2;
  return basis;
}

double FiberModel::distance(const Vec& a, const Vec& b) const {
  Vec d = a - b;
  if (kind_ == FiberKind::Torus) {
    for (int i = 0; i < ambient_dim_; ++i) d(i) -= period_(i) * std::round(d(i) / period_(i));
  }
  return d.norm();
}

}  // namespace fibersys
