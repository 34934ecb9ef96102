#pragma once

// Numerical substrate: vector fields on coordinate domains, curves, fixed-step
// RK4 flows and Lie brackets.

#include "fibersys/errors.hpp"

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <vector>

namespace fibersys {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kDefaultBlowupBound = 1e8;
inline constexpr double kDefaultFdStep = 1e-5;
inline constexpr int kDefaultStepsPerUnit = 1000;

// Central-difference jacobian. The step is rel_step * max(1, |p|_inf).
Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& p, double rel_step = kDefaultFdStep);

class VectorField {
 public:
  using Eval = std::function<Vec(const Vec&)>;
  using Jacobian = std::function<Mat(const Vec&)>;

  VectorField(int dim, Eval eval, Jacobian jacobian = {}, double fd_step = kDefaultFdStep);

  static VectorField zero(int dim);
  static VectorField constant(const Vec& value);
  // p -> A p + b, exact jacobian A.
  static VectorField affine(const Mat& a, const Vec& b);

  int dim() const { return dim_; }
  Vec operator()(const Vec& p) const;
  Mat jacobian(const Vec& p) const;
  bool has_exact_jacobian() const { return static_cast<bool>(jacobian_); }

  // Same field with the exact jacobian dropped, forcing the finite-difference path.
  VectorField without_jacobian() const;

 private:
  int dim_;
  Eval eval_;
  Jacobian jacobian_;
  double fd_step_;
};

using TimeDependentField = std::function<Vec(double, const Vec&)>;

// Where a flow may live. An empty `contains` accepts everything; `normalize`
// is applied after every accepted step (torus wrap, sphere renormalisation).
struct FlowDomain {
  std::function<bool(const Vec&)> contains;
  std::function<void(Vec&)> normalize;
};

struct FlowOptions {
  FlowDomain domain;
  double blowup_bound = kDefaultBlowupBound;
  // Step doubling: integrate a second time with half the step and compare.
  bool estimate_error = true;
  // Keep every accepted state (for traces).
  bool record = false;
};

struct FlowResult {
  Vec end;
  // |coarse - fine| * 16/15, zero when estimate_error is off.
  double error_estimate = 0.0;
  std::vector<double> times;
  std::vector<Vec> states;
};

// Classical RK4 from t0 to t1 (t1 < t0 integrates backwards) in `steps` equal
// steps. Throws EscapeDetected carrying the last in-domain time when the state
// leaves options.domain or its norm exceeds options.blowup_bound.
FlowResult integrate_flow(const TimeDependentField& field, const Vec& start, double t0, double t1, int steps,
                          const FlowOptions& options = {});
FlowResult integrate_flow(const VectorField& field, const Vec& start, double t0, double t1, int steps,
                          const FlowOptions& options = {});

// [X, Y](p) = DY(p) X(p) - DX(p) Y(p).
Vec lie_bracket(const VectorField& x, const VectorField& y, const Vec& at);

// Fl^X_{-s} o Fl^Y_{-t} o Fl^X_{s} o Fl^Y_{t} applied to `at`. Each flow leg
// uses `steps` RK4 steps regardless of its length so that the result is a
// smooth function of (t, s).
Vec flow_commutator(const VectorField& x, const VectorField& y, const Vec& at, double t, double s, int steps = 200,
                    const FlowOptions& options = {});

// Piecewise smooth parametrised curve in R^n with an analytic derivative.
class Curve {
 public:
  using Eval = std::function<Vec(double)>;

  Curve(double t0, double t1, Eval eval, Eval derivative, std::vector<double> breakpoints = {});

  // One unit of parameter per segment: t in [0, points.size() - 1].
  static Curve polyline(const std::vector<Vec>& points);
  static Curve segment(const Vec& from, const Vec& to);
  // c(t) = sum_i coeffs[i] t^i on [t0, t1].
  static Curve polynomial(const std::vector<Vec>& coeffs, double t0 = 0.0, double t1 = 1.0);
  // Planar arc of a circle, t in [0, 1] maps to angles [a0, a1].
  static Curve arc(const Vec& center, double radius, double a0, double a1);
  // t -> center + t (x - center) on [0, 1].
  static Curve radial(const Vec& center, const Vec& x);
  static Curve constant(const Vec& x, double t0 = 0.0, double t1 = 1.0);
  // Pieces laid end to end on [0, 1], each reparametrised by a bump map whose
  // derivative vanishes at the junctions. With a nonzero period for a
  // coordinate, each piece is shifted by whole periods to start where the
  // previous one ended.
  static Curve concatenate(const std::vector<Curve>& pieces, const Vec& period = Vec());

  double t0() const { return t0_; }
  double t1() const { return t1_; }
  int dim() const;
  Vec operator()(double t) const { return eval_(t); }
  Vec derivative(double t) const { return derivative_(t); }
  // Derivative of the smooth piece spanning [a, b] at t in [a, b]: endpoints
  // that sit on a breakpoint take the one-sided value from inside [a, b].
  Vec derivative_within(double t, double a, double b) const;
  // Interior parameters where the curve is only piecewise smooth.
  const std::vector<double>& breakpoints() const { return breakpoints_; }

  Curve reversed() const;
  Curve shifted(const Vec& offset) const;
  // c o phi on [s0, s1], phi monotone with phi(s0) = t0 and phi(s1) = t1.
  Curve reparametrized(double s0, double s1, std::function<double(double)> phi,
                       std::function<double(double)> dphi) const;
  Curve restricted(double a, double b) const;
  // Same geometric curve on the parameter interval [0, 1].
  Curve normalized() const;

 private:
  double t0_;
  double t1_;
  Eval eval_;
  Eval derivative_;
  std::vector<double> breakpoints_;
};

// Euclidean length by Gauss-Legendre quadrature per smooth piece.
double curve_length(const Curve& c);

}  // namespace fibersys
