#pragma once

#include "fibersys/geometry.hpp"

#include <functional>
#include <map>
#include <vector>

namespace fibersys {

// Vector-valued polynomial map R^m -> R^n, stored as exponent vector ->
// coefficient vector. Closed under sums, partial derivatives and bilinear
// products, so brackets of sections stay exact.
class PolyMap {
 public:
  using Powers = std::vector<int>;

  PolyMap(int in_dim, int out_dim);

  static PolyMap constant(int in_dim, const Vec& value);
  // x -> a x + b.
  static PolyMap affine(const Mat& a, const Vec& b);
  // The coordinate function x -> x_j, as a scalar map.
  static PolyMap coordinate(int in_dim, int j);

  int in_dim() const { return in_dim_; }
  int out_dim() const { return out_dim_; }
  int degree() const;
  const std::map<Powers, Vec>& terms() const { return terms_; }

  PolyMap& add_term(const Powers& powers, const Vec& coeff);

  Vec operator()(const Vec& x) const;
  PolyMap partial(int j) const;
  Mat jacobian(const Vec& x) const;

  PolyMap operator+(const PolyMap& other) const;
  PolyMap operator-(const PolyMap& other) const;
  PolyMap operator*(double s) const;

  // (p, q) -> x |-> f(p(x), q(x)) for f bilinear, expanded term by term.
  static PolyMap bilinear(const PolyMap& p, const PolyMap& q, int out_dim,
                          const std::function<Vec(const Vec&, const Vec&)>& f);
  // Directional derivative x |-> Dp(x) X(x) for a polynomial vector field X.
  PolyMap derivative_along(const PolyMap& field) const;

 private:
  int in_dim_;
  int out_dim_;
  std::map<Powers, Vec> terms_;
};

inline PolyMap operator*(double s, const PolyMap& p) { return p * s; }

// The vector field of a polynomial map R^m -> R^m, with exact jacobian.
VectorField as_vector_field(const PolyMap& p);

}  // namespace fibersys
