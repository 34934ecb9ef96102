#pragma once

#include "fibersys/geometry.hpp"

#include <functional>
#include <random>
#include <string>

namespace fibersys {

enum class FiberKind { Euclidean, Torus, Sphere };

// Standard fiber S: R^k, a flat torus R^k / (period Z^k), or the unit sphere
// S^2 in R^3. An optional open restriction turns it into a sub-bundle fiber.
class FiberModel {
 public:
  static FiberModel euclidean(int dim);
  static FiberModel torus(const Vec& period);
  static FiberModel sphere();

  FiberKind kind() const { return kind_; }
  // Coordinates used to store points (3 for the sphere).
  int ambient_dim() const { return ambient_dim_; }
  int manifold_dim() const { return kind_ == FiberKind::Sphere ? 2 : ambient_dim_; }
  const Vec& period() const { return period_; }
  bool is_restricted() const { return static_cast<bool>(restriction_); }
  const std::string& restriction_label() const { return label_; }

  // Open subset given by `predicate` (intersected with any existing restriction).
  // Sampling draws from [sample_lo, sample_hi] when provided.
  FiberModel restricted(std::function<bool(const Vec&)> predicate, std::string label, const Vec& sample_lo = Vec(),
                        const Vec& sample_hi = Vec()) const;
  // Open box restriction (lo, hi).
  FiberModel restricted_to_box(const Vec& lo, const Vec& hi) const;
  // Open ball restriction |s - center| < radius.
  FiberModel restricted_to_ball(const Vec& center, double radius) const;

  bool contains(const Vec& s) const;
  void normalize(Vec& s) const;
  FlowDomain flow_domain() const;

  // Random point of the fiber (inside the restriction).
  Vec sample(std::mt19937_64& rng) const;
  // Orthonormal basis of the tangent space at s, as columns in ambient coordinates.
  Mat tangent_basis(const Vec& s) const;
  // Distance that respects the torus identification.
  double distance(const Vec& a, const Vec& b) const;

 private:
  FiberModel(FiberKind kind, int ambient_dim, Vec period);

  FiberKind kind_;
  int ambient_dim_;
  Vec period_;
  std::function<bool(const Vec&)> restriction_;
  std::string label_;
  Vec sample_lo_;
  Vec sample_hi_;
};

}  // namespace fibersys
