#include "doctest.h"
#include "fibersys/lie.hpp"

#include <cmath>
#include <random>

using namespace fibersys;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }
Vec v3(double a, double b, double c) { return (Vec(3) << a, b, c).finished(); }

// Fields A_i = -L_i, so the generators M_i = L_i satisfy [L1, L2] = L3.
Representation so3_on_r3() {
  return Representation::linear({-so3_generator(0), -so3_generator(1), -so3_generator(2)}, GroupKind::Rotation);
}

Representation so2_on_r2() { return Representation::linear({rotation_generator_2d()}, GroupKind::Rotation); }

Mat random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  return matrix_exp(g(rng) * so3_generator(0) + g(rng) * so3_generator(1) + g(rng) * so3_generator(2));
}

}  // namespace

TEST_CASE("bracket_V") {
  const LieAlgebra ab = LieAlgebra::abelian(1);
  CHECK(ab.bracket(Vec::Constant(1, 2.0), Vec::Constant(1, -3.0)).norm() == 0.0);
  const LieAlgebra so3 = LieAlgebra::so3();
  CHECK((so3.bracket(v3(1, 0, 0), v3(0, 1, 0)) - v3(0, 0, 1)).norm() == 0.0);
  CHECK(so3.bracket(v3(0.3, -1, 2), v3(0.3, -1, 2)).norm() == 0.0);
  CHECK_THROWS_AS(so3.bracket(v2(1, 0), v3(0, 1, 0)), DimensionMismatch);
  CHECK(so3.jacobi_residual() < 1e-12);
  CHECK(so3.antisymmetry_residual() == 0.0);
}

TEST_CASE("so(3) structure constants agree with the matrix commutators") {
  const LieAlgebra from = LieAlgebra::from_matrices({so3_generator(0), so3_generator(1), so3_generator(2)});
  const LieAlgebra so3 = LieAlgebra::so3();
  for (int i = 0; i < 27; ++i) CHECK(std::abs(from.structure_constants()[i] - so3.structure_constants()[i]) < 1e-12);
  CHECK_THROWS_AS(LieAlgebra::from_matrices({so3_generator(0), so3_generator(1)}), BasisProjectionError);
}

TEST_CASE("broken Jacobi identity is measurable") {
  std::vector<double> c(27, 0.0);
  auto set = [&c](int i, int j, int k, double v) {
    c[(i * 3 + j) * 3 + k] = v;
    c[(j * 3 + i) * 3 + k] = -v;
  };
  set(0, 1, 2, 1.0);
  set(1, 2, 0, 1.0);
  set(2, 0, 1, 1.0);
  set(0, 1, 0, 1.0);
  CHECK(LieAlgebra(3, c).jacobi_residual() > 1e-3);
}

TEST_CASE("matrix exponential") {
  CHECK((matrix_exp(Mat::Zero(3, 3)) - Mat::Identity(3, 3)).norm() == 0.0);
  Mat quarter(2, 2);
  quarter << 0, -1, 1, 0;
  CHECK((matrix_exp(M_PI / 2 * rotation_generator_2d()) - quarter).norm() < 1e-10);
  const Mat v = 0.7 * rotation_generator_2d();
  CHECK((matrix_exp(v) * matrix_exp(v) - matrix_exp(2 * v)).norm() < 1e-9);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  Mat w(4, 4);
  for (int i = 0; i < 16; ++i) w(i) = g(rng);
  CHECK((matrix_exp(w) * matrix_exp(-w) - Mat::Identity(4, 4)).norm() < 1e-10);
  CHECK((matrix_log(matrix_exp(0.3 * w)) - 0.3 * w).norm() < 1e-9);
}

TEST_CASE("Ad") {
  const Representation rep = so3_on_r3();
  const GroupElement id = GroupElement::identity(3, GroupKind::Rotation);
  CHECK((Ad(rep, id, v3(0.1, 0.2, 0.3)) - v3(0.1, 0.2, 0.3)).norm() < 1e-14);
  const GroupElement g(matrix_exp(M_PI / 2 * so3_generator(2)), GroupKind::Rotation);
  CHECK((Ad(rep, g, v3(1, 0, 0)) - v3(0, 1, 0)).norm() < 1e-9);
  const Representation so2 = so2_on_r2();
  const GroupElement h(matrix_exp(1.3 * rotation_generator_2d()), GroupKind::Rotation);
  CHECK(std::abs(Ad(so2, h, Vec::Constant(1, 0.8))(0) - 0.8) < 1e-14);
}

TEST_CASE("Ad is an algebra map") {
  const Representation rep = so3_on_r3();
  const LieAlgebra lie = rep.algebra();
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (int n = 0; n < 10; ++n) {
    const GroupElement el(random_rotation(rng), GroupKind::Rotation);
    const Vec v = v3(g(rng), g(rng), g(rng));
    const Vec w = v3(g(rng), g(rng), g(rng));
    CHECK((Ad(rep, el, lie.bracket(v, w)) - lie.bracket(Ad(rep, el, v), Ad(rep, el, w))).norm() < 1e-8);
  }
}

TEST_CASE("Ad rejects conjugates outside the span") {
  // so(2) acting on the first two coordinates of R^3, conjugated by a tilt.
  Mat a = Mat::Zero(3, 3);
  a.topLeftCorner(2, 2) = rotation_generator_2d();
  const Representation rep = Representation::linear({a}, GroupKind::Rotation);
  const GroupElement tilt(matrix_exp(0.5 * so3_generator(0)), GroupKind::Rotation);
  CHECK_THROWS_AS(Ad(rep, tilt, Vec::Ones(1)), BasisProjectionError);
}

TEST_CASE("left-invariant integration") {
  const Representation rep = so3_on_r3();
  const GroupPath zero = integrate_left_invariant(rep, [](double) { return Vec(Vec::Zero(3)); }, 1.0, 50);
  for (const GroupElement& g : zero.elements) CHECK((g.matrix() - Mat::Identity(3, 3)).norm() == 0.0);
  const Vec v = v3(0.4, -0.2, 0.9);
  const GroupPath constant = integrate_left_invariant(rep, [&](double) { return v; }, 1.0, 200);
  CHECK((constant.elements.front().matrix() - Mat::Identity(3, 3)).norm() == 0.0);
  CHECK((constant.elements.back().matrix() - matrix_exp(rep.generator(v))).norm() < 1e-8);
  CHECK(constant.elements.back().membership_residual() < 1e-9);

  const Representation so2 = so2_on_r2();
  const GroupPath timed = integrate_left_invariant(so2, [](double t) { return Vec(Vec::Constant(1, std::cos(3 * t))); }, 1.0, 1000);
  const double integral = std::sin(3.0) / 3.0;
  CHECK((timed.elements.back().matrix() - matrix_exp(so2.generator(Vec::Constant(1, integral)))).norm() < 1e-8);
}

TEST_CASE("affine group elements") {
  const Representation rep({Mat::Zero(1, 1)}, {Vec::Ones(1)}, GroupKind::Affine);
  CHECK(rep.matrix_size() == 2);
  const GroupPath p = integrate_left_invariant(rep, [](double) { return Vec(Vec::Ones(1)); }, 2.0, 10);
  const GroupElement g = p.elements.back();
  CHECK(g.membership_residual() < 1e-12);
  // Acting on s moves it by +2 along the field b = 1.
  CHECK(std::abs(rep.act(g, Vec::Constant(1, 0.5))(0) - 2.5) < 1e-12);
  CHECK(((g * g.inverse()).matrix() - Mat::Identity(2, 2)).norm() < 1e-14);
}

TEST_CASE("fundamental fields") {
  const Representation so2 = so2_on_r2();
  CHECK(fundamental_field(so2, Vec::Zero(1))(v2(1, 2)).norm() == 0.0);
  CHECK((fundamental_field(so2, Vec::Ones(1))(v2(1, 0)) - v2(0, 1)).norm() == 0.0);
  CHECK_THROWS_AS(fundamental_field(so2, v2(1, 0)), DimensionMismatch);

  const Representation rep = so3_on_r3();
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  for (int n = 0; n < 10; ++n) {
    const Vec v = v3(g(rng), g(rng), g(rng));
    const Vec s = v3(g(rng), g(rng), g(rng));
    const double h = 1e-6;
    const GroupElement plus = exp(h * rep.generator(v), GroupKind::Rotation);
    const GroupElement minus = exp(-h * rep.generator(v), GroupKind::Rotation);
    const Vec fd = (rep.act(plus, s) - rep.act(minus, s)) / (2 * h);
    CHECK((fd - fundamental_field(rep, v)(s)).norm() < 1e-6);
  }
}

TEST_CASE("fundamental fields are a homomorphism at 100 samples") {
  const Representation rep = so3_on_r3();
  const LieAlgebra lie = rep.algebra();
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  double worst = 0.0;
  for (int n = 0; n < 100; ++n) {
    const Vec s = v3(g(rng), g(rng), g(rng));
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const Vec ei = Vec::Unit(3, i), ej = Vec::Unit(3, j);
        const Vec lhs = lie_bracket(fundamental_field(rep, ei), fundamental_field(rep, ej), s);
        worst = std::max(worst, (lhs - rep.eval(lie.bracket(ei, ej), s)).norm());
      }
    }
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("pullback of fundamental fields by the action is Ad") {
  // (r^g)^* rho(v) (s) = D(r^g)^{-1} rho(v)(r^g s) = rho(Ad(g) v)(s).
  const Representation rep = so3_on_r3();
  std::mt19937_64 rng(13);
  std::normal_distribution<double> g;
  for (int n = 0; n < 10; ++n) {
    const GroupElement el(random_rotation(rng), GroupKind::Rotation);
    const Vec v = v3(g(rng), g(rng), g(rng));
    const Vec s = v3(g(rng), g(rng), g(rng));
    const Mat d = el.acting();
    const Vec pulled = d.inverse() * rep.eval(v, rep.act(el, s));
    CHECK((pulled - rep.eval(Ad(rep, el, v), s)).norm() < 1e-8);
  }
  // Affine case.
  const Representation aff({Mat::Zero(1, 1), Mat::Identity(1, 1)}, {Vec::Ones(1), Vec::Zero(1)}, GroupKind::Affine);
  const GroupElement el = exp(aff.generator(v2(0.7, -0.4)), GroupKind::Affine);
  const Vec s = Vec::Constant(1, 0.3);
  const Mat lin = el.acting().topLeftCorner(1, 1);
  for (const Vec& v : {v2(1, 0), v2(0, 1), v2(0.5, 2)}) {
    const Vec pulled = lin.inverse() * aff.eval(v, aff.act(el, s));
    CHECK((pulled - aff.eval(Ad(aff, el, v), s)).norm() < 1e-8);
  }
}
