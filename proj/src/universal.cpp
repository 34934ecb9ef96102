#include "fibersys/universal.hpp"

#include <cmath>

namespace fibersys {

namespace {

void check_tangent(const TangentC& x) {
  const Mat& s = x.foot.s;
  if (x.foot.x.size() != s.cols() || x.xi.size() != s.cols()) throw DimensionMismatch("base velocity dimension");
  if (x.s_dot.rows() != s.rows() || x.s_dot.cols() != s.cols()) throw DimensionMismatch("splitting velocity shape");
}

void check_foot(const SystemSpec& sys, const TangentC& x) {
  check_tangent(x);
  sys.require_in_chart(x.foot.chart, x.foot.x);
  if (x.foot.s.rows() != sys.algebra_dim() || x.foot.s.cols() != sys.base_dim()) {
    throw DimensionMismatch("splitting value has the wrong shape");
  }
}

}  // namespace

KappaValue kappa(const TangentC& x, const HValue& h) {
  check_tangent(x);
  if (h.xi.size() != x.xi.size() || h.v.size() != x.foot.s.rows()) throw DimensionMismatch("H value has the wrong shape");
  const double gap = (h.xi - x.xi).norm();
  if (gap > 1e-12 * std::max(1.0, x.xi.norm())) {
    throw FiberedProductViolation("eta_bar(h) differs from the base velocity of X by " + std::to_string(gap));
  }
  return {x, h.v - x.foot.s * h.xi};
}

KappaInverse kappa_inv(const TangentC& x, const Vec& a) {
  check_tangent(x);
  if (a.size() != x.foot.s.rows()) throw DimensionMismatch("kernel value has the wrong dimension");
  return {x, HValue{x.xi, a + x.foot.s * x.xi}};
}

UniversalLift universal_lift(const SystemSpec& sys, const TangentC& x, const Vec& e) {
  check_foot(sys, x);
  return {x, sys.eta(x.foot.chart).eval(x.foot.s * x.xi, e)};
}

Vec universal_projection(const SystemSpec& sys, const TangentC& x, const Vec& y, const Vec& e) {
  check_foot(sys, x);
  if (y.size() != sys.fiber_dim()) throw DimensionMismatch("fiber tangent has the wrong dimension");
  return y - sys.eta(x.foot.chart).eval(x.foot.s * x.xi, e);
}

ConnPoint section_point(const Splitting& sigma, int chart, const Vec& x) { return {chart, x, sigma.value(chart, x)}; }

TangentC section_tangent(const Splitting& sigma, int chart, const Vec& x, const Vec& xi) {
  Mat s_dot = Mat::Zero(sigma.algebra_dim(), sigma.base_dim());
  for (int j = 0; j < sigma.base_dim(); ++j) {
    if (xi(j) != 0.0) s_dot += xi(j) * sigma.partial(chart, x, j);
  }
  return {section_point(sigma, chart, x), xi, s_dot};
}

double relatedness_check_43(const Connection& conn, int samples, std::uint64_t seed) {
  const SystemSpec& sys = conn.system();
  const int m = sys.base_dim();
  const int k = sys.fiber_dim();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::normal_distribution<double> gauss;
  double worst = 0.0;
  for (int n = 0; n < samples; ++n) {
    const int chart = n % sys.base().chart_count();
    const Box& box = sys.base().box(chart);
    Vec x(m), xi(m), y(k);
    for (int j = 0; j < m; ++j) {
      const double half = std::min(2.0, 0.5 * (box.hi(j) - box.lo(j)));
      x(j) = box.center()(j) + half * unit(rng);
      xi(j) = gauss(rng);
    }
    const Vec e = sys.fiber().sample(rng);
    for (int j = 0; j < k; ++j) y(j) = gauss(rng);
    // T(sigma x_M E) maps (xi, Y) to (T sigma . xi, Y).
    const TangentE lift = horizontal_lift(conn, chart, x, xi, e);
    const TangentC pushed = section_tangent(conn.splitting(), chart, x, lift.base);
    const UniversalLift ulift = universal_lift(sys, pushed, e);
    worst = std::max(worst, (ulift.fiber - lift.fiber).norm());
    worst = std::max(worst, (ulift.x.xi - lift.base).norm());
    const Vec phi = vertical_projection(conn, chart, x, e, TangentE{xi, y});
    const Vec phi_univ = universal_projection(sys, section_tangent(conn.splitting(), chart, x, xi), y, e);
    worst = std::max(worst, (phi - phi_univ).norm());
  }
  return worst;
}

CurveInC CurveInC::of_splitting(const Splitting& sigma, int chart, const Curve& c) {
  return {chart, c, [sigma, chart, c](double t) { return sigma.value(chart, c(t)); },
          [sigma, chart, c](double t) {
            const Vec x = c(t);
            const Vec v = c.derivative(t);
            Mat out = Mat::Zero(sigma.algebra_dim(), sigma.base_dim());
            for (int j = 0; j < sigma.base_dim(); ++j) out += v(j) * sigma.partial(chart, x, j);
            return out;
          }};
}

CurveInC CurveInC::vertical(int chart, const Vec& x, const Mat& s0, const Mat& s1) {
  const Mat delta = s1 - s0;
  return {chart, Curve::constant(x), [s0, delta](double t) { return Mat(s0 + t * delta); },
          [delta](double) { return delta; }};
}

TransportResult universal_transport(const SystemSpec& sys, const CurveInC& curve, double t, const Vec& e0, int steps,
                                    bool record) {
  const Curve& c = curve.base;
  if (steps < 1) throw DomainError("transport needs at least one step");
  if (t < c.t0() || t > c.t1() + 1e-12) throw DomainError("transport time outside the curve's parameter interval");
  if (!sys.fiber().contains(e0)) throw DomainError("start point is not in the fiber");
  const Box& box = sys.base().box(curve.chart);
  const int scan = std::max(64, static_cast<int>(std::ceil(256.0 * (t - c.t0()))));
  for (int i = 0; i <= scan; ++i) {
    if (!box.contains(c(c.t0() + (t - c.t0()) * i / scan))) {
      throw ChartMismatch("universal transport leaves chart " + std::to_string(curve.chart));
    }
  }
  std::vector<double> cuts;
  for (double b : c.breakpoints()) {
    if (b > c.t0() && b < t) cuts.push_back(b);
  }
  cuts.push_back(t);
  const Representation& rep = sys.eta(curve.chart);
  FlowOptions flow;
  flow.domain = sys.fiber().flow_domain();
  flow.record = record;

  TransportResult res;
  res.end_chart = curve.chart;
  Vec e = e0;
  double ta = c.t0();
  for (double tb : cuts) {
    const int n = std::max(1, static_cast<int>(std::llround(steps * (tb - ta) / (t - c.t0()))));
    TimeDependentField field = [&](double tau, const Vec& u) {
      return rep.eval(curve.s(tau) * c.derivative_within(tau, ta, tb), u);
    };
    const FlowResult fr = integrate_flow(field, e, ta, tb, n, flow);
    res.segments.push_back({curve.chart, Vec::Zero(c.dim()), ta, tb, n});
    res.error_estimate += fr.error_estimate;
    res.times.insert(res.times.end(), fr.times.begin(), fr.times.end());
    res.states.insert(res.states.end(), fr.states.begin(), fr.states.end());
    e = fr.end;
    ta = tb;
  }
  res.end = e;
  return res;
}

ViaUniversal transport_via_universal(const SystemSpec& sys, const Splitting& tau, const Splitting& sigma, int chart,
                                     const Curve& c, double t, const Vec& e0, int steps) {
  const Vec x0 = c(c.t0());
  const Vec xt = c(t);
  const TransportResult b0 =
      universal_transport(sys, CurveInC::vertical(chart, x0, sigma.value(chart, x0), tau.value(chart, x0)), 1.0, e0, 16);
  const TransportResult main = universal_transport(sys, CurveInC::of_splitting(tau, chart, c), t, b0.end, steps);
  const TransportResult bt =
      universal_transport(sys, CurveInC::vertical(chart, xt, tau.value(chart, xt), sigma.value(chart, xt)), 1.0, main.end, 16);
  ViaUniversal out;
  out.end = bt.end;
  out.vertical_displacement = (b0.end - e0).norm() + (bt.end - main.end).norm();
  out.error_estimate = b0.error_estimate + main.error_estimate + bt.error_estimate;
  return out;
}

}  // namespace fibersys
