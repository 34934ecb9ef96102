#include "doctest.h"
#include "fibersys/reconstruction.hpp"
#include "fibersys/scenario.hpp"

#include <cmath>

using namespace fibersys;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }
Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }
Vec v3(double a, double b, double c) { return (Vec(3) << a, b, c).finished(); }

double angle_of(const Mat& rot) { return std::atan2(rot(1, 0), rot(0, 0)); }
double gap(const Mat& a) { return (a - Mat::Identity(a.rows(), a.cols())).norm(); }

const Scenario& circle() {
  static const Scenario sc = load_scenario("circle-base-winding");
  return sc;
}

}  // namespace

TEST_CASE("radial atlas") {
  const RadialAtlas ra(circle().conn.system().base(), circle().x0);
  CHECK(ra.chart_count() == 2);
  CHECK(ra.x0_chart() == 0);
  const Curve r = ra.radial(1, v1(0.2));
  CHECK((r(0.0) - ra.center(1)).norm() < 1e-12);
  CHECK(std::abs(r(1.0)(0) - (0.2 + 2 * M_PI)) < 1e-12);
  CHECK((ra.base_curve(1)(0.0) - circle().x0).norm() < 1e-12);
  CHECK(ra.radial(0, ra.center(0)).derivative(0.5).norm() == 0.0);
  CHECK_THROWS_AS(ra.radial(0, v1(3.9)), ChartMismatch);
}

TEST_CASE("bundle atlas") {
  const Scenario ab = load_scenario("abelian-area");
  const Vec x = v2(0.8, 1.5);
  // sigma = x dy e1: along t -> t x the line integral is x1 x2 / 2.
  const RadialAtlas ra(ab.conn.system().base(), v2(0, 0));
  CHECK(std::abs(angle_of(build_bundle_atlas(ab.conn, ra, 0, x)) - 0.6) < 1e-9);
  CHECK(gap(build_bundle_atlas(ab.conn, ra, 0, v2(0, 0))) < 1e-14);

  // From (-1, 0.5) to the centre (0, 0): x = -1 + t, dy = -0.5 dt gives 0.25.
  const RadialAtlas shifted(ab.conn.system().base(), v2(-1.0, 0.5));
  CHECK(std::abs(angle_of(build_bundle_atlas(ab.conn, shifted, 0, x)) - 0.85) < 1e-9);
  CHECK(std::abs(angle_of(build_bundle_atlas(ab.conn, shifted, 0, v2(0, 0))) - 0.25) < 1e-9);

  const Scenario flat = load_scenario("trivial");
  const RadialAtlas rt(flat.conn.system().base(), flat.x0);
  CHECK(gap(build_bundle_atlas(flat.conn, rt, 0, v2(3, -2))) < 1e-14);
}

TEST_CASE("reconstructed cocycle") {
  const Scenario flat = load_scenario("trivial");
  const Cocycle single = build_cocycle(flat.conn, RadialAtlas(flat.conn.system().base(), flat.x0));
  CHECK(single.samples.empty());
  CHECK(single.transitions.empty());
  CHECK(single.worst() < 1e-14);

  const Scenario so3 = load_scenario("so3-sphere");
  CHECK(build_cocycle(so3.conn, RadialAtlas(so3.conn.system().base(), so3.x0)).identity_residual < 1e-10);

  const Connection& conn = circle().conn;
  const RadialAtlas ra(conn.system().base(), circle().x0);
  const Cocycle cc = build_cocycle(conn, ra);
  CHECK(cc.samples.size() == 32);
  CHECK(cc.identity_residual < 1e-6);
  CHECK(cc.inverse_residual < 1e-6);
  CHECK(cc.atlas_residual < 1e-6);
  CHECK(cc.transitions.size() == 2);

  // psi_01 near theta = 0 after psi_10 near theta = pi winds once around the base.
  const Mat composite = cocycle_element(conn, ra, 0, 1, v1(2 * M_PI), 400) * cocycle_element(conn, ra, 1, 0, v1(M_PI), 400);
  const HolonomyResult hol = holonomy_loop(conn, circle().curve("circle"), v2(1, 0), 400);
  CHECK((composite - hol.acting).norm() < 1e-6);
  CHECK(std::abs(angle_of(composite) - (0.2 * M_PI - 1.0)) < 1e-6);
}

TEST_CASE("a broken transition is reported") {
  const Scenario& sc = circle();
  const SystemSpec& sys = sc.conn.system();
  std::vector<BundleTransition> bad = sys.transitions();
  bad.push_back({0, 1, [](const Vec&) { return Mat(Mat::Identity(2, 2) * 1.1); }});
  CHECK_THROWS_AS(build_associated_system(sys.base(), bad, sys.eta(0), sys.fiber(), 8, 1e-6), CocycleViolation);
}

TEST_CASE("fundamental field projection") {
  const Scenario ab = load_scenario("abelian-area");
  const FundamentalProjection p = fundamental_field_projection(ab.conn, 0, v2(2, 0), v2(0, 1));
  CHECK(std::abs(p.coefficients(0) - 2.0) < 1e-10);
  CHECK(p.residual < 1e-10);

  const Connection zero(ab.conn.system(), Splitting::zero(2, 1));
  const FundamentalProjection z = fundamental_field_projection(zero, 0, v2(2, 0), v2(0, 1));
  CHECK(z.coefficients.norm() == 0.0);
  CHECK(z.residual == 0.0);

  const VectorField adversarial(2, [](const Vec& s) { return v2(s(0) * s(0), 0.0); });
  CHECK_THROWS_AS(fundamental_field_projection(ab.conn.system(), 0, adversarial), BasisProjectionError);

  const Scenario so3 = load_scenario("so3-sphere");
  for (const Vec& x : {v2(0, 0), v2(0.5, -0.3), v2(-1, 1)}) {
    for (const Vec& xi : {v2(1, 0), v2(0, 1), v2(0.3, 0.7)}) {
      const FundamentalProjection q = fundamental_field_projection(so3.conn, 0, x, xi);
      CHECK((q.coefficients - so3.conn.splitting().apply(0, x, xi)).norm() < 1e-10);
    }
  }
}

TEST_CASE("associated bundle round trip") {
  const Scenario so3 = load_scenario("so3-sphere");
  const AssociatedRoundTrip rt = associated_round_trip(so3.conn, so3.x0);
  CHECK(rt.compare(so3.conn, so3.curve("arc"), 1.0, v3(0, 0.6, 0.8), 100) < 1e-6);

  const AssociatedRoundTrip rc = associated_round_trip(circle().conn, circle().x0);
  CHECK(rc.compare(circle().conn, circle().curve("circle"), circle().curve("circle").t1(), v2(1, 0), 100) < 1e-6);
  CHECK(rc.compare(circle().conn, circle().curve("half"), 1.0, v2(0.3, -2), 100) < 1e-6);
}

TEST_CASE("reconstruction report") {
  const Connection& conn = circle().conn;
  const RadialAtlas ra(conn.system().base(), circle().x0);
  const nlohmann::json rep = reconstruction_report(conn, ra, build_cocycle(conn, ra));
  CHECK(rep["charts"] == 2);
  CHECK(rep["overlaps"].size() == 2);
  CHECK(rep["samples"].size() == 32);
  CHECK(rep["projections"].size() == 2);
  CHECK(rep["projections"][0]["residual"].get<double>() < 1e-10);
}
