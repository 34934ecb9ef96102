#include "fibersys/polynomial.hpp"

#include <algorithm>
#include <cmath>

namespace fibersys {

PolyMap::PolyMap(int in_dim, int out_dim) : in_dim_(in_dim), out_dim_(out_dim) {
  if (in_dim < 0 || out_dim < 0) throw DimensionMismatch("negative polynomial dimensions");
}

PolyMap PolyMap::constant(int in_dim, const Vec& value) {
  PolyMap p(in_dim, static_cast<int>(value.size()));
  p.add_term(Powers(in_dim, 0), value);
  return p;
}

PolyMap PolyMap::affine(const Mat& a, const Vec& b) {
  if (a.rows() != b.size()) throw DimensionMismatch("affine polynomial: rows of A must match b");
  const auto m = static_cast<int>(a.cols());
  PolyMap p = constant(m, b);
  for (int j = 0; j < m; ++j) {
    Powers pw(m, 0);
    pw[j] = 1;
    p.add_term(pw, a.col(j));
  }
  return p;
}

PolyMap PolyMap::coordinate(int in_dim, int j) {
  PolyMap p(in_dim, 1);
  Powers pw(in_dim, 0);
  pw.at(j) = 1;
  p.add_term(pw, Vec::Ones(1));
  return p;
}

int PolyMap::degree() const {
  int deg = 0;
  for (const auto& [pw, coeff] : terms_) {
    int d = 0;
    for (int e : pw) d += e;
    deg = std::max(deg, d);
  }
  return deg;
}

PolyMap& PolyMap::add_term(const Powers& powers, const Vec& coeff) {
  if (static_cast<int>(powers.size()) != in_dim_ || coeff.size() != out_dim_) {
    throw DimensionMismatch("polynomial term has the wrong shape");
  }
  if (std::any_of(powers.begin(), powers.end(), [](int e) { return e < 0; })) {
    throw DimensionMismatch("negative exponent in polynomial term");
  }
  auto [it, inserted] = terms_.try_emplace(powers, coeff);
  if (!inserted) it->second += coeff;
  return *this;
}

Vec PolyMap::operator()(const Vec& x) const {
  if (x.size() != in_dim_) throw DimensionMismatch("polynomial evaluated at a point of the wrong dimension");
  Vec out = Vec::Zero(out_dim_);
  for (const auto& [pw, coeff] : terms_) {
    double mono = 1.0;
    for (int j = 0; j < in_dim_; ++j) {
      for (int e = 0; e < pw[j]; ++e) mono *= x(j);
    }
    out += mono * coeff;
  }
  return out;
}

PolyMap PolyMap::partial(int j) const {
  PolyMap d(in_dim_, out_dim_);
  for (const auto& [pw, coeff] : terms_) {
    if (pw.at(j) == 0) continue;
    Powers lowered = pw;
    lowered[j] -= 1;
    d.add_term(lowered, static_cast<double>(pw[j]) * coeff);
  }
  return d;
}

Mat PolyMap::jacobian(const Vec& x) const {
  Mat jac(out_dim_, in_dim_);
  for (int j = 0; j < in_dim_; ++j) jac.col(j) = partial(j)(x);
  return jac;
}

PolyMap PolyMap::operator+(const PolyMap& other) const {
  if (other.in_dim_ != in_dim_ || other.out_dim_ != out_dim_) throw DimensionMismatch("polynomial sum shape mismatch");
  PolyMap sum = *this;
  for (const auto& [pw, coeff] : other.terms_) sum.add_term(pw, coeff);
  return sum;
}

PolyMap PolyMap::operator-(const PolyMap& other) const { return *this + other * -1.0; }

PolyMap PolyMap::operator*(double s) const {
  PolyMap scaled = *this;
  for (auto& [pw, coeff] : scaled.terms_) coeff *= s;
  return scaled;
}

PolyMap PolyMap::bilinear(const PolyMap& p, const PolyMap& q, int out_dim,
                          const std::function<Vec(const Vec&, const Vec&)>& f) {
  if (p.in_dim_ != q.in_dim_) throw DimensionMismatch("bilinear product of polynomials on different domains");
  PolyMap out(p.in_dim_, out_dim);
  for (const auto& [pa, ca] : p.terms_) {
    for (const auto& [pb, cb] : q.terms_) {
      Powers pw(p.in_dim_);
      for (int j = 0; j < p.in_dim_; ++j) pw[j] = pa[j] + pb[j];
      out.add_term(pw, f(ca, cb));
    }
  }
  return out;
}

PolyMap PolyMap::derivative_along(const PolyMap& field) const {
  if (field.in_dim_ != in_dim_ || field.out_dim_ != in_dim_) {
    throw DimensionMismatch("derivative_along needs a vector field on the same domain");
  }
  PolyMap out(in_dim_, out_dim_);
  for (int j = 0; j < in_dim_; ++j) {
    PolyMap xj(in_dim_, 1);
    for (const auto& [pw, coeff] : field.terms_) xj.add_term(pw, coeff.segment(j, 1));
    out = out + bilinear(xj, partial(j), out_dim_, [](const Vec& a, const Vec& b) -> Vec { return a(0) * b; });
  }
  return out;
}

VectorField as_vector_field(const PolyMap& p) {
  if (p.in_dim() != p.out_dim()) throw DimensionMismatch("a vector field must map R^m to R^m");
  return VectorField(
      p.in_dim(), [p](const Vec& x) { return p(x); }, [p](const Vec& x) { return p.jacobian(x); });
}

}  // namespace fibersys
