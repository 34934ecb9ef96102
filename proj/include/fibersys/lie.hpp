#pragma once

// Finite-dimensional Lie algebras, matrix groups and fundamental fields.
//
// Action convention. Every group acts on the fiber from the right,
//
//     s . g := g^{-1} s        (augmented coordinates for affine groups),
//
// so for a generator matrix M(v) the fundamental field is
//
//     rho(v)(s) = d/dt (exp(t M(v))^{-1} s)|_{t=0} = -M(v) s.
//
// Fiber fields are specified directly as affine fields s -> A_i s + b_i and the
// group generators are M_i = -[[A_i, b_i], [0, 0]]. With the bracket
// [X, Y] = DY.X - DX.Y, v -> rho(v) is then a Lie algebra homomorphism for the
// structure constants of the M_i under the matrix commutator. A left action
// l(g, s) = g s has fundamental field map -rho and is represented by negating
// the field data.

#include "fibersys/geometry.hpp"

#include <functional>
#include <vector>

namespace fibersys {

class LieAlgebra {
 public:
  // Abelian algebra of the given dimension.
  explicit LieAlgebra(int dim);
  // structure[(i * dim + j) * dim + k] = c_ij^k with [e_i, e_j] = sum_k c_ij^k e_k.
  LieAlgebra(int dim, std::vector<double> structure);

  static LieAlgebra abelian(int dim) { return LieAlgebra(dim); }
  static LieAlgebra so3();
  // Structure constants of span{generators} under the matrix commutator.
  // Throws BasisProjectionError if the span is not closed.
  static LieAlgebra from_matrices(const std::vector<Mat>& generators, double gate = 1e-8);

  int dim() const { return dim_; }
  double structure(int i, int j, int k) const { return c_[(i * dim_ + j) * dim_ + k]; }
  const std::vector<double>& structure_constants() const { return c_; }

  Vec bracket(const Vec& v, const Vec& w) const;
  // Matrix of ad(v) = [v, .].
  Mat ad(const Vec& v) const;

  double antisymmetry_residual() const;
  double jacobi_residual() const;

 private:
  int dim_;
  std::vector<double> c_;
};

enum class GroupKind { Rotation, Affine, General };

// Element of a matrix group, stored in the form that solves the left-invariant
// equation g' = g M(xi). The matrix that moves fiber coordinates is
// acting() = g^{-1}.
class GroupElement {
 public:
  GroupElement(Mat matrix, GroupKind kind);
  static GroupElement identity(int n, GroupKind kind);
  // The element whose acting matrix is `acting`.
  static GroupElement from_acting(const Mat& acting, GroupKind kind);

  const Mat& matrix() const { return g_; }
  Mat acting() const;
  GroupKind kind() const { return kind_; }
  int size() const { return static_cast<int>(g_.rows()); }

  GroupElement inverse() const;
  GroupElement operator*(const GroupElement& other) const;

  // ||g^T g - I|| for rotations, last-row defect for affine groups.
  double membership_residual() const;
  // Nearest group member: polar factor for rotations, exact last row for affine.
  GroupElement projected() const;

 private:
  Mat g_;
  GroupKind kind_;
};

struct GroupPath {
  std::vector<double> times;
  std::vector<GroupElement> elements;
};

// Matrix exponential and principal logarithm.
Mat matrix_exp(const Mat& a);
Mat matrix_log(const Mat& g);

GroupElement exp(const Mat& algebra_matrix, GroupKind kind);

// Affine fiber fields rho(e_i)(s) = A_i s + b_i and the matrix group they
// integrate to (see the convention above).
class Representation {
 public:
  Representation(std::vector<Mat> a, std::vector<Vec> b, GroupKind kind);
  static Representation linear(std::vector<Mat> a, GroupKind kind);

  int algebra_dim() const { return static_cast<int>(a_.size()); }
  int fiber_dim() const { return fiber_dim_; }
  bool is_linear() const { return linear_; }
  // Size of the group matrices: k for linear actions, k + 1 for affine ones.
  int matrix_size() const { return linear_ ? fiber_dim_ : fiber_dim_ + 1; }
  GroupKind group_kind() const { return kind_; }

  const Mat& field_matrix(int i) const { return a_[i]; }
  const Vec& field_offset(int i) const { return b_[i]; }
  Mat field_matrix(const Vec& v) const;
  Vec field_offset(const Vec& v) const;
  // [[A(v), b(v)], [0, 0]] (just A(v) for linear actions).
  Mat augmented_field(const Vec& v) const;
  // M(v) = -augmented_field(v).
  Mat generator(const Vec& v) const;

  Vec eval(const Vec& v, const Vec& s) const;
  // s . g
  Vec act(const GroupElement& g, const Vec& s) const;
  // Apply a matrix that acts on fiber coordinates (augmented if affine).
  Vec apply_acting(const Mat& acting, const Vec& s) const;

  // Least-squares coordinates of an augmented field matrix in the basis
  // augmented_field(e_i); `residual` receives the Frobenius misfit.
  Vec field_coordinates(const Mat& field, double& residual) const;
  // The Lie algebra spanned by the generators.
  LieAlgebra algebra() const;

 private:
  std::vector<Mat> a_;
  std::vector<Vec> b_;
  GroupKind kind_;
  int fiber_dim_;
  bool linear_;
  Mat basis_;  // columns: vec(augmented_field(e_i))
};

// rho(v), the fundamental field of v, with exact jacobian.
VectorField fundamental_field(const Representation& rep, const Vec& v);

// Ad(g) v: coordinates of g M(v) g^{-1}. Throws BasisProjectionError if the
// conjugate leaves the span of the generators by more than `gate`.
Vec Ad(const Representation& rep, const GroupElement& g, const Vec& v, double gate = 1e-8);

// g' = g M(xi(t)), g(t0) = start, by RK4 with projection onto the group after
// every step.
GroupPath integrate_left_invariant(const Representation& rep, const std::function<Vec(double)>& xi, double t0,
                                   double t1, int steps, const GroupElement& start,
                                   double blowup_bound = kDefaultBlowupBound);
GroupPath integrate_left_invariant(const Representation& rep, const std::function<Vec(double)>& xi, double t1,
                                   int steps);

// Standard generators of so(3) with [L1, L2] = L3 and the so(2) generator J.
Mat so3_generator(int i);
Mat rotation_generator_2d();

}  // namespace fibersys
