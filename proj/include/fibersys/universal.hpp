#pragma once

// The bundle of connections C(H) in chart coordinates: a point is a base
// point x with a d x m matrix S, the splitting value xi -> (xi, S xi). The
// universal connection on C x_M E lifts X in TC at (S, e) to
// (X, eta(S . Tp_C X)(e)).

#include "fibersys/connection.hpp"

namespace fibersys {

struct ConnPoint {
  int chart = 0;
  Vec x;
  Mat s;  // d x m
};

struct TangentC {
  ConnPoint foot;
  Vec xi;     // base velocity Tp_C X
  Mat s_dot;  // velocity of the splitting value
};

// A value h in H_x in canonical form: (eta_bar(h), V part).
struct HValue {
  Vec xi;
  Vec v;
};

struct KappaValue {
  TangentC x;
  Vec a;  // the kernel part
};

struct KappaInverse {
  TangentC x;
  HValue h;
};

// (X, h) -> (X, h - S eta_bar(h)). Throws FiberedProductViolation unless
// eta_bar(h) equals the base velocity of X.
KappaValue kappa(const TangentC& x, const HValue& h);
KappaInverse kappa_inv(const TangentC& x, const Vec& a);

struct UniversalLift {
  TangentC x;
  Vec fiber;
};

UniversalLift universal_lift(const SystemSpec& sys, const TangentC& x, const Vec& e);
Vec universal_projection(const SystemSpec& sys, const TangentC& x, const Vec& y, const Vec& e);

// sigma as a section of C: the point over x and the tangent T sigma . xi.
ConnPoint section_point(const Splitting& sigma, int chart, const Vec& x);
TangentC section_tangent(const Splitting& sigma, int chart, const Vec& x, const Vec& xi);

// Max residual of both relatedness squares (horizontal lifts and vertical
// projections) of C_sigma and C^univ along sigma x_M E at random samples.
double relatedness_check_43(const Connection& conn, int samples, std::uint64_t seed = 0);

// A curve t -> (c(t), S(t)) in C over one base chart.
struct CurveInC {
  int chart = 0;
  Curve base;
  std::function<Mat(double)> s;
  std::function<Mat(double)> s_dot;

  static CurveInC of_splitting(const Splitting& sigma, int chart, const Curve& c);
  // Straight line from s0 to s1 in the fiber of C over x, t in [0, 1].
  static CurveInC vertical(int chart, const Vec& x, const Mat& s0, const Mat& s1);
};

// Integrates e' = eta(S(t) c'(t))(e). The base curve must stay inside its
// chart (ChartMismatch otherwise).
TransportResult universal_transport(const SystemSpec& sys, const CurveInC& curve, double t, const Vec& e0, int steps,
                                    bool record = false);

struct ViaUniversal {
  Vec end;
  double vertical_displacement = 0.0;  // fiber motion along both vertical legs
  double error_estimate = 0.0;
};

// Pt^tau(c, t) as Pt^univ(b_t^-1) Pt^univ(tau o c, t) Pt^univ(b_0), with b_0 and
// b_t the vertical segments between the sigma and tau values.
ViaUniversal transport_via_universal(const SystemSpec& sys, const Splitting& tau, const Splitting& sigma, int chart,
                                     const Curve& c, double t, const Vec& e0, int steps);

}  // namespace fibersys
