#include "doctest.h"
#include "fibersys/lie.hpp"

#include <cmath>
#include <random>

using namespace fibersys;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }
Vec v3(double a, double b, double c) { return (Vec(3) << a, b, c).finished(); }

VectorField linear_field(const Mat& a) { return VectorField::affine(a, Vec::Zero(a.rows())); }

}  // namespace

TEST_CASE("constant flow moves by t times the field") {
  const FlowResult r = integrate_flow(VectorField::constant(v2(1, 0)), v2(0, 0), 0.0, 1.0, 10);
  CHECK((r.end - v2(1, 0)).norm() < 1e-14);
}

TEST_CASE("rotation flow reaches (0,1) at a quarter turn") {
  const FlowResult r = integrate_flow(linear_field(rotation_generator_2d()), v2(1, 0), 0.0, M_PI / 2, 1000);
  CHECK((r.end - v2(0, 1)).norm() < 1e-8);
  CHECK(r.error_estimate < 1e-10);
}

TEST_CASE("x^2 blows up near t = 1") {
  VectorField f(1, [](const Vec& x) { return Vec(x.array().square()); });
  try {
    integrate_flow(f, Vec::Ones(1), 0.0, 2.0, 2000);
    FAIL("expected an escape");
  } catch (const EscapeDetected& e) {
    CHECK(std::abs(e.time() - 1.0) < 1e-2);
  }
}

TEST_CASE("leaving the declared domain is an escape") {
  FlowOptions opt;
  opt.domain.contains = [](const Vec& s) { return s(0) < 1.0; };
  try {
    integrate_flow(VectorField::constant(Vec::Ones(1)), Vec::Constant(1, 0.5), 0.0, 1.0, 7, opt);
    FAIL("expected an escape");
  } catch (const EscapeDetected& e) {
    CHECK(std::abs(e.time() - 0.5) < 1e-9);
  }
}

TEST_CASE("flow composition agrees within the error estimate") {
  VectorField f(2, [](const Vec& p) { return v2(std::sin(p(1)), 0.5 * p(0) - 0.2 * p(1) * p(1)); });
  const Vec p = v2(0.3, -0.7);
  const FlowResult whole = integrate_flow(f, p, 0.0, 1.5, 300);
  const FlowResult a = integrate_flow(f, p, 0.0, 0.5, 100);
  const FlowResult b = integrate_flow(f, a.end, 0.5, 1.5, 200);
  const double bound = 10.0 * (whole.error_estimate + a.error_estimate + b.error_estimate);
  CHECK((whole.end - b.end).norm() <= std::max(bound, 1e-14));
}

TEST_CASE("brackets of constant fields vanish") {
  CHECK(lie_bracket(VectorField::constant(v2(1, 2)), VectorField::constant(v2(-3, 0.5)), v2(0.1, 0.2)).norm() == 0.0);
}

TEST_CASE("so(3) rotation fields bracket to the commutator field") {
  const VectorField l1 = linear_field(so3_generator(0));
  const VectorField l2 = linear_field(so3_generator(1));
  const Vec p = v3(1, 1, 1);
  const Vec br = lie_bracket(l1, l2, p);
  // DY.X - DX.Y of linear fields is the matrix commutator with the opposite sign.
  const Vec expected = -(so3_generator(0) * so3_generator(1) - so3_generator(1) * so3_generator(0)) * p;
  CHECK((br - expected).norm() < 1e-14);
  CHECK((br - v3(1, -1, 0)).norm() < 1e-14);
  CHECK(std::abs(br.norm() - (so3_generator(2) * p).norm()) < 1e-14);
  CHECK(lie_bracket(l1, l1, p).norm() == 0.0);
}

TEST_CASE("bracket antisymmetry is exact and fd jacobians match exact ones") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  auto rand_mat = [&] {
    Mat m(3, 3);
    for (int i = 0; i < 9; ++i) m(i) = g(rng);
    return m;
  };
  auto rand_vec = [&] { return v3(g(rng), g(rng), g(rng)); };
  const VectorField x = VectorField::affine(rand_mat(), rand_vec());
  const VectorField y = VectorField::affine(rand_mat(), rand_vec());
  const VectorField z = VectorField::affine(rand_mat(), rand_vec());
  for (int n = 0; n < 20; ++n) {
    const Vec p = rand_vec();
    CHECK((lie_bracket(x, y, p) + lie_bracket(y, x, p)).norm() == 0.0);
    CHECK((x.jacobian(p) - x.without_jacobian().jacobian(p)).norm() < 1e-6);
    // [X,[Y,Z]] + cyclic, with the inner brackets again affine fields.
    auto bracket_field = [](const VectorField& a, const VectorField& b) {
      return VectorField(3, [a, b](const Vec& q) { return lie_bracket(a, b, q); },
                         [a, b](const Vec& q) { return Mat(b.jacobian(q) * a.jacobian(q) - a.jacobian(q) * b.jacobian(q)); });
    };
    const Vec jac = lie_bracket(x, bracket_field(y, z), p) + lie_bracket(y, bracket_field(z, x), p) +
                    lie_bracket(z, bracket_field(x, y), p);
    CHECK(jac.norm() < 1e-9);
  }
}

TEST_CASE("flow commutator is the identity for commuting fields and zero times") {
  const Vec p = v2(0.4, -1.1);
  CHECK((flow_commutator(VectorField::constant(v2(1, 0)), VectorField::constant(v2(0, 1)), p, 0.3, 0.7) - p).norm() < 1e-14);
  const VectorField x = linear_field(so3_generator(0));
  const VectorField y = linear_field(so3_generator(1));
  const Vec q = v3(0.2, 0.5, -0.3);
  CHECK((flow_commutator(x, y, q, 0.0, 0.4) - q).norm() < 1e-12);
  CHECK((flow_commutator(x, y, q, 0.4, 0.0) - q).norm() < 1e-12);
}

TEST_CASE("flow commutator displacement is -t s [X, Y] to second order") {
  const VectorField x = linear_field(so3_generator(0));
  const VectorField y = linear_field(so3_generator(1));
  const Vec p = v3(0.2, 0.5, -0.3);
  // Richardson in h = t = s on D(h) = (f(p) - p) / h^2 = D0 + a h + b h^2 + O(h^3).
  auto d = [&](double h) { return Vec((flow_commutator(x, y, p, h, h) - p) / (h * h)); };
  const Vec extrapolated = (8.0 * d(0.025) - 6.0 * d(0.05) + d(0.1)) / 3.0;
  CHECK((extrapolated + lie_bracket(x, y, p)).norm() < 1e-4);
}

TEST_CASE("curve derivatives match central differences") {
  const std::vector<Curve> curves = {
      Curve::polyline({v2(0, 0), v2(1, 0), v2(1, 2)}),
      Curve::polynomial({v2(0, 1), v2(1, -1), v2(0.5, 0.25)}, -0.5, 1.5),
      Curve::arc(v2(1, 1), 2.0, 0.3, 2.0),
      Curve::radial(v2(0, 0), v2(1.5, -0.5)),
      Curve::concatenate({Curve::segment(v2(0, 0), v2(1, 0)), Curve::arc(v2(1, 1), 1.0, -M_PI / 2, 0.0)}),
  };
  for (const Curve& c : curves) {
    for (int i = 1; i < 20; ++i) {
      const double t = c.t0() + (c.t1() - c.t0()) * (i + 0.37) / 20.0;
      bool near_break = false;
      for (double b : c.breakpoints()) near_break = near_break || std::abs(b - t) < 1e-3;
      if (near_break || t >= c.t1()) continue;
      const double h = 1e-6;
      const Vec fd = (c(t + h) - c(t - h)) / (2 * h);
      CHECK((fd - c.derivative(t)).norm() < 1e-6);
    }
  }
}

TEST_CASE("concatenation joins pieces and is flat at junctions") {
  const Curve a = Curve::segment(v2(0, 0), v2(1, 0));
  const Curve b = Curve::segment(v2(1, 0), v2(1, 1));
  const Curve c = Curve::concatenate({a, b});
  CHECK(c.t0() == 0.0);
  CHECK(c.t1() == 1.0);
  CHECK((c(0.0) - v2(0, 0)).norm() < 1e-15);
  CHECK((c(0.5) - v2(1, 0)).norm() < 1e-12);
  CHECK((c(1.0) - v2(1, 1)).norm() < 1e-12);
  CHECK(c.derivative(0.5).norm() < 1e-12);
  CHECK_THROWS_AS(Curve::concatenate({a, Curve::segment(v2(2, 0), v2(3, 0))}), DomainError);
}

TEST_CASE("curve lengths") {
  CHECK(std::abs(curve_length(Curve::arc(v2(0, 0), 2.0, 0.0, M_PI)) - 2.0 * M_PI) < 1e-10);
  CHECK(std::abs(curve_length(Curve::polyline({v2(0, 0), v2(3, 0), v2(3, 4)})) - 7.0) < 1e-12);
}
