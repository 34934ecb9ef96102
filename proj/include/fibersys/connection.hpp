#pragma once

// H-connections given by splittings sigma: TM -> H. In chart alpha the
// connection is C(xi, s) = (xi, eta^alpha(sigma^alpha(xi))(s)) and its
// Christoffel form is the fiber field s -> eta^alpha(sigma^alpha(xi))(s).
//
// Orientation: the holonomy of the counterclockwise eps x eps coordinate loop
// at x is exp(eps^2 A(R) + O(eps^3)) as an acting matrix, with
// R = dsigma(X1, X2) + [sigma X1, sigma X2] and A the augmented field matrix.

#include "fibersys/system.hpp"

#include <iosfwd>
#include <optional>

namespace fibersys {

class Splitting {
 public:
  // d x m matrix, column j = sigma(d/dx_j), as a function of chart coordinates.
  using Value = std::function<Mat(const Vec&)>;

  // Per chart, m polynomial maps x -> sigma(d/dx_j)(x) in V. A single entry
  // is shared by every chart.
  static Splitting polynomial(std::vector<std::vector<PolyMap>> components);
  // Function-backed splitting; partials by central differences.
  static Splitting functional(int base_dim, int algebra_dim, std::vector<Value> values,
                              double fd_step = kDefaultFdStep);
  static Splitting zero(int base_dim, int algebra_dim);

  int base_dim() const { return m_; }
  int algebra_dim() const { return d_; }
  // 0 means "shared by all charts".
  int chart_count() const { return shared_ ? 0 : static_cast<int>(slots_); }
  bool is_polynomial() const { return !poly_.empty(); }
  const std::vector<PolyMap>& components(int chart) const;

  Mat value(int chart, const Vec& x) const;
  Vec apply(int chart, const Vec& x, const Vec& xi) const { return value(chart, x) * xi; }
  // d/dx_j of value(chart, x).
  Mat partial(int chart, const Vec& x, int j) const;

 private:
  Splitting(int m, int d) : m_(m), d_(d) {}
  int slot(int chart) const;

  int m_;
  int d_;
  bool shared_ = false;
  std::size_t slots_ = 0;
  std::vector<std::vector<PolyMap>> poly_;
  std::vector<Value> fn_;
  double fd_step_ = kDefaultFdStep;
};

class Connection {
 public:
  Connection(SystemSpec sys, Splitting sigma);

  const SystemSpec& system() const { return sys_; }
  const Splitting& splitting() const { return sigma_; }

 private:
  SystemSpec sys_;
  Splitting sigma_;
};

using TangentE = EtaValue;

// Augmented field matrix of eta^alpha(sigma^alpha(xi)) at x.
Mat christoffel_matrix(const Connection& conn, int chart, const Vec& x, const Vec& xi);
VectorField christoffel(const Connection& conn, int chart, const Vec& x, const Vec& xi);
TangentE horizontal_lift(const Connection& conn, int chart, const Vec& x, const Vec& xi, const Vec& e);
Vec vertical_projection(const Connection& conn, int chart, const Vec& x, const Vec& e, const TangentE& y);
// The horizontal lift of the constant base field X as a field on U x S
// (coordinates (x, s) in R^{m+k}), without exact jacobian.
VectorField horizontal_lift_field(const Connection& conn, int chart, const Vec& base_direction,
                                  double fd_step = kDefaultFdStep);

// Sampled defect of the chart splittings under the bundle transitions:
// A^beta(sigma^beta(xi)) against psi A^alpha(sigma^alpha(xi)) psi^{-1} + (d_xi psi) psi^{-1}.
double splitting_compatibility_residual(const Connection& conn, int samples, std::uint64_t seed = 0);

struct TransportOptions {
  std::optional<int> start_chart;
  // Chart in which the end point is expressed; defaults to the chart of the
  // last segment.
  std::optional<int> end_chart;
  bool record = false;
  bool estimate_error = true;
};

// One chart-constant piece of a transport.
struct TransportSegment {
  int chart;
  Vec shift;  // covering coordinates + shift = chart coordinates
  double t0;
  double t1;
  int steps;
};

struct TransportResult {
  Vec end;
  int end_chart = 0;
  double error_estimate = 0.0;
  std::vector<TransportSegment> segments;
  // Recorded fiber path (chart coordinates of the segment in force).
  std::vector<double> times;
  std::vector<Vec> states;
  // Group route only: path of group elements and the net acting matrix.
  std::optional<GroupPath> group;
  std::optional<Mat> acting;
};

// Chart pieces of c on [c.t0(), t] with `steps` RK4 steps spread in
// proportion to parameter length (at least one per piece).
std::vector<TransportSegment> plan_segments(const Connection& conn, const Curve& c, double t, int steps,
                                            std::optional<int> start_chart = std::nullopt);

// Integrates the Christoffel field along c directly on the fiber.
TransportResult transport_direct(const Connection& conn, const Curve& c, double t, const Vec& u0, int steps,
                                 const TransportOptions& options = {});
// Integrates g' = g M(sigma(c')) on the group and acts on u0.
TransportResult transport_group(const Connection& conn, const Curve& c, double t, const Vec& u0, int steps,
                                const TransportOptions& options = {});

struct CurvatureValue {
  Vec v;
  VectorField as_field;
};

CurvatureValue curvature_formula(const Connection& conn, int chart, const Vec& x, const Vec& x1, const Vec& x2);
// Vertical part of the Lie bracket of the two horizontal-lift fields at (x, e).
Vec curvature_bracket(const Connection& conn, int chart, const Vec& x, const Vec& x1, const Vec& x2, const Vec& e,
                      double fd_scale = kDefaultFdStep);

struct HolonomyResult {
  TransportResult transport;
  std::optional<GroupElement> element;
  // Acting matrix from the start fiber back to itself.
  Mat acting;
};

// Transport around a closed curve, expressed back in the starting chart.
HolonomyResult holonomy_loop(const Connection& conn, const Curve& c, const Vec& u0, int steps,
                             std::optional<int> chart = std::nullopt);
// Coordinates of log(acting) in the augmented-field basis of the chart.
// Throws LogBranchError when an eigenvalue sits on the negative real axis.
Vec holonomy_log(const Connection& conn, int chart, const Mat& acting);

struct HolonomyAlgebraEstimate {
  std::vector<Vec> samples;
  int rank = 0;
  Mat basis;  // d x rank, orthonormal columns
  std::vector<double> singular_values;
};

// Pulls the curvature at the end of every path back to the common start x0
// as Ad(g)R and ranks the span. Every coordinate tangent pair is sampled.
HolonomyAlgebraEstimate holonomy_algebra_sample(const Connection& conn, const std::vector<Curve>& paths, int steps,
                                                double gate = 1e-6, double rank_threshold = 1e-8);

// Ad route: coordinates in the start chart of g A^end(v) g^{-1}.
// Throws BasisProjectionError when the conjugate leaves the span by more than `gate`.
Vec ad_transport(const Connection& conn, const TransportResult& group_transport, const Vec& v, double gate = 1e-6);

// Pt(c, t)^* eta(v) by finite differences through transport_direct against
// eta(Ad(g(t)) v), at the given start fiber points. Max residual.
double ad_pullback_check(const Connection& conn, const Curve& c, double t, const Vec& v,
                         const std::vector<Vec>& sample_points, int steps, double fd_step = 1e-4);

struct Claim2Report {
  double residual = 0.0;    // worst projection misfit over the grid
  double max_field = 0.0;   // largest |Z| seen, for scale
  std::vector<Vec> coefficients;  // per grid point, row-major over (t, s)
};

// f_{t,s} = Fl^X_{-s} o Fl^Y_{-t} o Fl^X_s o Fl^Y_t of the horizontal lifts of
// the constant base fields X and Y; Z = (d/dt f) o f^{-1} projected onto
// span{eta(e_i)} at sampled fiber points.
Claim2Report claim2_check(const Connection& conn, int chart, const Vec& x, const Vec& dir_x, const Vec& dir_y,
                          const std::vector<double>& t_grid, const std::vector<double>& s_grid,
                          const std::vector<Vec>& fiber_points, int steps_per_leg = 200, double dt = 1e-4);

struct SmallLoopEstimate {
  Vec value;               // extrapolated
  std::vector<Vec> raw;    // log(hol) / eps^2 per eps
  double observed_order = 0.0;
};

SmallLoopEstimate small_loop_limit(const Connection& conn, int chart, const Vec& x, const Vec& x1, const Vec& x2,
                                   const std::vector<double>& epsilons, int steps = 800);

// t, base coordinates, fiber coordinates and group entries, one row per
// recorded step.
void write_trace_csv(std::ostream& out, const Curve& c, const TransportResult& result);

}  // namespace fibersys
