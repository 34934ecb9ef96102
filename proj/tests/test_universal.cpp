#include "doctest.h"
#include "fibersys/universal.hpp"
#include "fibersys/scenario.hpp"

#include <random>

using namespace fibersys;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }
Vec v3(double a, double b, double c) { return (Vec(3) << a, b, c).finished(); }

const Scenario& abelian() {
  static const Scenario sc = load_scenario("abelian-area");
  return sc;
}
const Scenario& so3() {
  static const Scenario sc = load_scenario("so3-sphere");
  return sc;
}

TangentC random_tangent(std::mt19937_64& rng, int d, int m) {
  std::normal_distribution<double> g;
  TangentC x;
  x.foot.x = Vec::NullaryExpr(m, [&] { return g(rng); });
  x.foot.s = Mat::NullaryExpr(d, m, [&] { return g(rng); });
  x.xi = Vec::NullaryExpr(m, [&] { return g(rng); });
  x.s_dot = Mat::NullaryExpr(d, m, [&] { return g(rng); });
  return x;
}

Splitting scaled(const Splitting& s, double f) {
  std::vector<PolyMap> comps;
  for (const PolyMap& p : s.components(0)) comps.push_back(p * f);
  return Splitting::polynomial({comps});
}

Splitting random_polynomial(std::mt19937_64& rng, int d) {
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::vector<PolyMap> comps;
  for (int j = 0; j < 2; ++j) {
    PolyMap p(2, d);
    for (const std::vector<int>& pw : std::vector<std::vector<int>>{{0, 0}, {1, 0}, {0, 1}, {1, 1}, {0, 2}}) {
      Vec c(d);
      for (int i = 0; i < d; ++i) c(i) = u(rng);
      p.add_term(pw, c);
    }
    comps.push_back(p);
  }
  return Splitting::polynomial({comps});
}

}  // namespace

TEST_CASE("kappa examples") {
  TangentC x;
  x.foot.x = v2(2, 0);
  x.foot.s = Mat::Zero(1, 2);
  x.foot.s(0, 1) = 2.0;
  x.xi = v2(0, 1);
  x.s_dot = Mat::Zero(1, 2);
  const KappaValue k = kappa(x, HValue{v2(0, 1), Vec::Zero(1)});
  CHECK(k.a(0) == doctest::Approx(-2.0));

  const KappaInverse zero = kappa_inv(x, Vec::Zero(1));
  CHECK(kappa(x, zero.h).a.norm() == 0.0);

  TangentC flat = x;
  flat.foot.s.setZero();
  CHECK(kappa(flat, HValue{v2(0, 1), Vec::Constant(1, 3.5)}).a(0) == 3.5);

  CHECK_THROWS_AS(kappa(x, HValue{v2(1, 0), Vec::Zero(1)}), FiberedProductViolation);
  CHECK_THROWS_AS(kappa(x, HValue{v2(0, 1), Vec::Zero(2)}), DimensionMismatch);
}

TEST_CASE("kappa and kappa_inv are mutually inverse") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int n = 0; n < 50; ++n) {
    const TangentC x = random_tangent(rng, 3, 2);
    const Vec a = v3(g(rng), g(rng), g(rng));
    const KappaInverse inv = kappa_inv(x, a);
    CHECK((kappa(x, inv.h).a - a).norm() < 1e-14 * std::max(1.0, a.norm() + x.foot.s.norm() * x.xi.norm()));
    const HValue h{x.xi, v3(g(rng), g(rng), g(rng))};
    const KappaInverse back = kappa_inv(x, kappa(x, h).a);
    CHECK((back.h.v - h.v).norm() < 1e-13 * std::max(1.0, h.v.norm() + x.foot.s.norm() * x.xi.norm()));
    CHECK(back.h.xi == h.xi);
  }
}

TEST_CASE("universal lift and projection") {
  const SystemSpec& sys = abelian().conn.system();
  const TangentC x = section_tangent(abelian().conn.splitting(), 0, v2(2, 0), v2(0, 1));
  const UniversalLift lift = universal_lift(sys, x, v2(1, 0));
  CHECK((lift.fiber - v2(0, 2)).norm() < 1e-14);
  CHECK(universal_projection(sys, x, lift.fiber, v2(1, 0)).norm() < 1e-14);

  TangentC vertical = x;
  vertical.xi.setZero();
  vertical.s_dot = Mat::Constant(1, 2, 7.0);
  CHECK(universal_lift(sys, vertical, v2(1, 0)).fiber.norm() == 0.0);
  CHECK(universal_projection(sys, vertical, v2(0.3, -4), v2(1, 0)) == v2(0.3, -4));

  // Linearity in X.
  TangentC twice = x;
  twice.xi *= 2.0;
  twice.s_dot *= 2.0;
  CHECK((universal_lift(sys, twice, v2(1, 0)).fiber - 2.0 * lift.fiber).norm() < 1e-14);

  // Idempotent projection; its kernel contains the lifts.
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  const SystemSpec& s3 = so3().conn.system();
  for (int n = 0; n < 20; ++n) {
    TangentC t = random_tangent(rng, 3, 2);
    const Vec e = s3.fiber().sample(rng);
    const Vec y = v3(g(rng), g(rng), g(rng));
    const Vec p = universal_projection(s3, t, y, e);
    // The projected vector is vertical; projecting it again leaves it unchanged.
    TangentC vert = t;
    vert.xi.setZero();
    CHECK((universal_projection(s3, vert, p, e) - p).norm() < 1e-12);
    CHECK(universal_projection(s3, t, universal_lift(s3, t, e).fiber, e).norm() < 1e-12);
    CHECK((y - p - universal_lift(s3, t, e).fiber).norm() < 1e-12);
  }

  TangentC outside = x;
  outside.foot.x = v2(500, 0);
  CHECK_THROWS_AS(universal_lift(sys, outside, v2(1, 0)), ChartMismatch);
}

TEST_CASE("relatedness of C_sigma and the universal connection") {
  CHECK(relatedness_check_43(abelian().conn, 100, 1) < 1e-10);
  CHECK(relatedness_check_43(so3().conn, 100, 2) < 1e-10);
  const Connection flat(so3().conn.system(), Splitting::polynomial({{PolyMap::constant(2, v3(0.1, 0.2, 0.3)),
                                                                     PolyMap::constant(2, v3(-1, 0, 0.5))}}));
  CHECK(relatedness_check_43(flat, 50, 3) == 0.0);
}

TEST_CASE("vertical universal transport is the identity") {
  const SystemSpec& sys = so3().conn.system();
  const Vec e0 = v3(0, 0.6, 0.8);
  const CurveInC b = CurveInC::vertical(0, v2(0.3, -0.2), Mat::Zero(3, 2), Mat::Constant(3, 2, 4.0));
  const TransportResult r = universal_transport(sys, b, 1.0, e0, 50);
  CHECK((r.end - e0).norm() <= r.error_estimate);
  CHECK((r.end - e0).norm() < 1e-10);
}

TEST_CASE("universal transport along sigma o c is sigma transport") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  for (const Scenario* sc : {&abelian(), &so3()}) {
    for (int n = 0; n < 3; ++n) {
      std::vector<Vec> coeffs;
      for (int i = 0; i < 4; ++i) coeffs.push_back(v2(u(rng), u(rng)));
      const Curve c = Curve::polynomial(coeffs);
      const Vec e0 = sc->conn.system().fiber().sample(rng);
      const TransportResult direct = transport_direct(sc->conn, c, 1.0, e0, 400);
      const TransportResult uni =
          universal_transport(sc->conn.system(), CurveInC::of_splitting(sc->conn.splitting(), 0, c), 1.0, e0, 400);
      CHECK((direct.end - uni.end).norm() < 1e-7);
    }
  }
  // Polyline with corners.
  const Curve sq = abelian().curve("unit-square");
  const TransportResult uni =
      universal_transport(abelian().conn.system(), CurveInC::of_splitting(abelian().conn.splitting(), 0, sq), sq.t1(),
                          v2(1, 0), 400);
  CHECK((uni.end - v2(std::cos(1.0), std::sin(1.0))).norm() < 1e-7);

  const Connection zero(abelian().conn.system(), Splitting::zero(2, 1));
  const TransportResult still =
      universal_transport(zero.system(), CurveInC::of_splitting(zero.splitting(), 0, sq), sq.t1(), v2(1, 0), 40);
  CHECK(still.end == v2(1, 0));

  const Curve away = Curve::segment(v2(0, 0), v2(200, 0));
  CHECK_THROWS_AS(universal_transport(abelian().conn.system(),
                                      CurveInC::of_splitting(abelian().conn.splitting(), 0, away), 1.0, v2(1, 0), 10),
                  ChartMismatch);
}

TEST_CASE("transport through the universal connection") {
  const Scenario& ab = abelian();
  const Curve c = ab.curve("half-disc");
  const Splitting tau = scaled(ab.conn.splitting(), 2.0);
  const ViaUniversal via = transport_via_universal(ab.conn.system(), tau, ab.conn.splitting(), 0, c, c.t1(), v2(1, 0), 800);
  const TransportResult direct = transport_direct(Connection(ab.conn.system(), tau), c, c.t1(), v2(1, 0), 800);
  CHECK((via.end - direct.end).norm() < 1e-6);
  CHECK(via.vertical_displacement == 0.0);

  const ViaUniversal same =
      transport_via_universal(ab.conn.system(), ab.conn.splitting(), ab.conn.splitting(), 0, c, c.t1(), v2(1, 0), 800);
  CHECK((same.end - transport_direct(ab.conn, c, c.t1(), v2(1, 0), 800).end).norm() < 1e-7);

  std::mt19937_64 rng(21);
  const Scenario& s3 = so3();
  const Curve arc = s3.curve("arc");
  for (int n = 0; n < 5; ++n) {
    const Splitting t = random_polynomial(rng, 3);
    const Vec e0 = s3.conn.system().fiber().sample(rng);
    const ViaUniversal r = transport_via_universal(s3.conn.system(), t, s3.conn.splitting(), 0, arc, arc.t1(), e0, 800);
    const TransportResult d = transport_direct(Connection(s3.conn.system(), t), arc, arc.t1(), e0, 800);
    CHECK((r.end - d.end).norm() < 1e-6);
  }
}
