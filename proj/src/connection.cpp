#include "fibersys/connection.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

namespace fibersys {

// ---------------------------------------------------------------------------
// Splitting

Splitting Splitting::polynomial(std::vector<std::vector<PolyMap>> components) {
  if (components.empty() || components.front().empty()) throw DimensionMismatch("splitting needs components");
  const int m = static_cast<int>(components.front().size());
  const int d = components.front().front().out_dim();
  for (const auto& chart : components) {
    if (static_cast<int>(chart.size()) != m) throw DimensionMismatch("one splitting component per base direction");
    for (const PolyMap& p : chart) {
      if (p.in_dim() != m || p.out_dim() != d) throw DimensionMismatch("splitting component has the wrong shape");
    }
  }
  Splitting s(m, d);
  s.shared_ = components.size() == 1;
  s.slots_ = components.size();
  s.poly_ = std::move(components);
  return s;
}

Splitting Splitting::functional(int base_dim, int algebra_dim, std::vector<Value> values, double fd_step) {
  if (values.empty()) throw DimensionMismatch("splitting needs at least one chart");
  Splitting s(base_dim, algebra_dim);
  s.shared_ = values.size() == 1;
  s.slots_ = values.size();
  s.fn_ = std::move(values);
  s.fd_step_ = fd_step;
  return s;
}

Splitting Splitting::zero(int base_dim, int algebra_dim) {
  return polynomial({std::vector<PolyMap>(base_dim, PolyMap(base_dim, algebra_dim))});
}

int Splitting::slot(int chart) const {
  if (chart < 0) throw ChartMismatch("negative chart index");
  if (shared_) return 0;
  if (chart >= static_cast<int>(slots_)) throw ChartMismatch("splitting has no chart " + std::to_string(chart));
  return chart;
}

const std::vector<PolyMap>& Splitting::components(int chart) const {
  if (!is_polynomial()) throw DomainError("splitting is not polynomial");
  return poly_[slot(chart)];
}

Mat Splitting::value(int chart, const Vec& x) const {
  if (x.size() != m_) throw DimensionMismatch("splitting evaluated at a point of the wrong dimension");
  const int k = slot(chart);
  if (!is_polynomial()) {
    Mat out = fn_[k](x);
    if (out.rows() != d_ || out.cols() != m_) throw DimensionMismatch("splitting value has the wrong shape");
    return out;
  }
  Mat out(d_, m_);
  for (int j = 0; j < m_; ++j) out.col(j) = poly_[k][j](x);
  return out;
}

Mat Splitting::partial(int chart, const Vec& x, int j) const {
  if (j < 0 || j >= m_) throw DimensionMismatch("partial index out of range");
  const int k = slot(chart);
  if (is_polynomial()) {
    Mat out(d_, m_);
    for (int c = 0; c < m_; ++c) out.col(c) = poly_[k][c].partial(j)(x);
    return out;
  }
  const double h = fd_step_ * std::max(1.0, x.cwiseAbs().maxCoeff());
  Vec xp = x, xm = x;
  xp(j) += h;
  xm(j) -= h;
  return (value(chart, xp) - value(chart, xm)) / (2.0 * h);
}

// ---------------------------------------------------------------------------
// Connection

Connection::Connection(SystemSpec sys, Splitting sigma) : sys_(std::move(sys)), sigma_(std::move(sigma)) {
  if (sigma_.base_dim() != sys_.base_dim()) throw DimensionMismatch("splitting and base dimensions differ");
  if (sigma_.algebra_dim() != sys_.algebra_dim()) throw DimensionMismatch("splitting and Lie algebra dimensions differ");
  if (sigma_.chart_count() != 0 && sigma_.chart_count() != sys_.base().chart_count()) {
    throw DimensionMismatch("splitting chart count differs from the base atlas");
  }
}

Mat christoffel_matrix(const Connection& conn, int chart, const Vec& x, const Vec& xi) {
  conn.system().require_in_chart(chart, x);
  if (xi.size() != conn.system().base_dim()) throw DimensionMismatch("base tangent has the wrong dimension");
  return conn.system().eta(chart).augmented_field(conn.splitting().apply(chart, x, xi));
}

VectorField christoffel(const Connection& conn, int chart, const Vec& x, const Vec& xi) {
  conn.system().require_in_chart(chart, x);
  if (xi.size() != conn.system().base_dim()) throw DimensionMismatch("base tangent has the wrong dimension");
  return fundamental_field(conn.system().eta(chart), conn.splitting().apply(chart, x, xi));
}

TangentE horizontal_lift(const Connection& conn, int chart, const Vec& x, const Vec& xi, const Vec& e) {
  conn.system().require_in_chart(chart, x);
  if (xi.size() != conn.system().base_dim()) throw DimensionMismatch("base tangent has the wrong dimension");
  return {xi, conn.system().eta(chart).eval(conn.splitting().apply(chart, x, xi), e)};
}

Vec vertical_projection(const Connection& conn, int chart, const Vec& x, const Vec& e, const TangentE& y) {
  conn.system().require_in_chart(chart, x);
  if (y.base.size() != conn.system().base_dim() || y.fiber.size() != conn.system().fiber_dim()) {
    throw DimensionMismatch("tangent vector has the wrong shape");
  }
  return y.fiber - conn.system().eta(chart).eval(conn.splitting().apply(chart, x, y.base), e);
}

VectorField horizontal_lift_field(const Connection& conn, int chart, const Vec& base_direction, double fd_step) {
  const int m = conn.system().base_dim();
  const int k = conn.system().fiber_dim();
  if (base_direction.size() != m) throw DimensionMismatch("base direction has the wrong dimension");
  const Representation rep = conn.system().eta(chart);
  const Splitting sigma = conn.splitting();
  const Vec dir = base_direction;
  auto eval = [rep, sigma, dir, chart, m, k](const Vec& p) -> Vec {
    Vec out(m + k);
    out.head(m) = dir;
    out.tail(k) = rep.eval(sigma.apply(chart, p.head(m), dir), p.tail(k));
    return out;
  };
  return VectorField(m + k, eval, {}, fd_step);
}

double splitting_compatibility_residual(const Connection& conn, int samples, std::uint64_t seed) {
  const SystemSpec& sys = conn.system();
  const BaseAtlas& atlas = sys.base();
  const int m = sys.base_dim();
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int a = 0; a < atlas.chart_count(); ++a) {
    for (int b = 0; b < atlas.chart_count(); ++b) {
      if (a == b) continue;
      for (const Vec& x : atlas.sample_overlap({a, b}, samples, rng)) {
        const Vec xb = *atlas.to_chart(b, x);
        const Mat psi = sys.transition(b, a, x);
        const Mat psi_inv = psi.inverse();
        for (int j = 0; j < m; ++j) {
          const double h = 1e-6;
          const Vec ej = Vec::Unit(m, j);
          const Mat dpsi = (sys.transition(b, a, x + h * ej) - sys.transition(b, a, x - h * ej)) / (2.0 * h);
          const Mat expected = psi * christoffel_matrix(conn, a, x, ej) * psi_inv + dpsi * psi_inv;
          worst = std::max(worst, (christoffel_matrix(conn, b, xb, ej) - expected).norm());
        }
      }
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Transport

std::vector<TransportSegment> plan_segments(const Connection& conn, const Curve& c, double t, int steps,
                                            std::optional<int> start_chart) {
  const BaseAtlas& atlas = conn.system().base();
  if (steps < 1) throw DomainError("transport needs at least one step");
  if (t < c.t0() || t > c.t1() + 1e-12) throw DomainError("transport time outside the curve's parameter interval");
  if (c.dim() != atlas.dim()) throw DimensionMismatch("curve and base dimensions differ");

  const Vec x0 = c(c.t0());
  int chart = start_chart ? *start_chart : atlas.best_chart(x0);
  auto first_shift = atlas.chart_shift(chart, x0);
  if (!first_shift) throw ChartMismatch("curve does not start in chart " + std::to_string(chart));
  Vec shift = *first_shift;

  std::vector<double> cuts;
  for (double b : c.breakpoints()) {
    if (b > c.t0() && b < t) cuts.push_back(b);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.push_back(t);

  std::vector<TransportSegment> segments;
  double ta = c.t0();
  std::size_t next = 0;
  while (ta < t) {
    while (cuts[next] <= ta) ++next;
    double tb = cuts[next];
    const Box& box = atlas.box(chart);
    auto inside = [&](double tau) { return box.contains(c(tau) + shift); };
    const int scan = std::max(16, static_cast<int>(std::ceil(64.0 * (tb - ta))));
    double last_in = ta;
    bool exited = false;
    double first_out = tb;
    for (int i = 1; i <= scan; ++i) {
      const double tau = i == scan ? tb : ta + (tb - ta) * i / scan;
      if (!inside(tau)) {
        exited = true;
        first_out = tau;
        break;
      }
      last_in = tau;
    }
    if (exited) {
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (last_in + first_out);
        (inside(mid) ? last_in : first_out) = mid;
      }
      tb = last_in;
      if (tb <= ta) throw DomainError("curve leaves every base chart");
    }
    segments.push_back({chart, shift, ta, tb, 0});
    ta = tb;
    if (exited) {
      const Vec x = c(ta);
      chart = atlas.best_chart(x);
      shift = *atlas.chart_shift(chart, x);
      if (chart == segments.back().chart && (shift - segments.back().shift).norm() == 0.0) {
        throw DomainError("curve leaves every base chart");
      }
    }
  }

  const double total = t - c.t0();
  for (TransportSegment& s : segments) {
    s.steps = std::max(1, static_cast<int>(std::llround(steps * (s.t1 - s.t0) / total)));
  }
  return segments;
}

namespace {

struct StartState {
  int chart;
  Vec shift;
};

StartState start_state(const Connection& conn, const Curve& c, const std::vector<TransportSegment>& segments,
                       std::optional<int> start_chart) {
  if (!segments.empty()) return {segments.front().chart, segments.front().shift};
  const BaseAtlas& atlas = conn.system().base();
  const Vec x0 = c(c.t0());
  const int chart = start_chart ? *start_chart : atlas.best_chart(x0);
  auto shift = atlas.chart_shift(chart, x0);
  if (!shift) throw ChartMismatch("curve does not start in chart " + std::to_string(chart));
  return {chart, *shift};
}

// Acting matrix that re-expresses the end point in options.end_chart.
std::optional<Mat> end_transition(const Connection& conn, const Curve& c, double t, const StartState& last,
                                  const TransportOptions& options) {
  if (!options.end_chart || *options.end_chart == last.chart) return std::nullopt;
  const Vec x = c(t) + last.shift;
  if (!conn.system().base().in_chart(*options.end_chart, x)) {
    throw ChartMismatch("curve does not end in chart " + std::to_string(*options.end_chart));
  }
  return conn.system().transition(*options.end_chart, last.chart, x);
}

void check_start(const Connection& conn, const Vec& u0) {
  if (u0.size() != conn.system().fiber_dim()) throw DimensionMismatch("fiber point has the wrong dimension");
  if (!conn.system().fiber().contains(u0)) throw DomainError("start point is not in the fiber");
}

}  // namespace

TransportResult transport_direct(const Connection& conn, const Curve& c, double t, const Vec& u0, int steps,
                                 const TransportOptions& options) {
  const SystemSpec& sys = conn.system();
  check_start(conn, u0);
  TransportResult res;
  res.segments = plan_segments(conn, c, t, steps, options.start_chart);
  StartState state = start_state(conn, c, res.segments, options.start_chart);

  FlowOptions flow;
  flow.domain = sys.fiber().flow_domain();
  flow.estimate_error = options.estimate_error;
  flow.record = options.record;

  Vec s = u0;
  if (res.segments.empty() && options.record) {
    res.times.push_back(c.t0());
    res.states.push_back(s);
  }
  for (std::size_t i = 0; i < res.segments.size(); ++i) {
    const TransportSegment& seg = res.segments[i];
    if (i > 0) {
      const Mat psi = sys.transition(seg.chart, state.chart, c(seg.t0) + state.shift);
      s = sys.eta(state.chart).apply_acting(psi, s);
      sys.fiber().normalize(s);
    }
    state = {seg.chart, seg.shift};
    const Representation& rep = sys.eta(seg.chart);
    const Splitting& sigma = conn.splitting();
    TimeDependentField field = [&](double tau, const Vec& u) {
      return rep.eval(sigma.apply(seg.chart, c(tau) + seg.shift, c.derivative_within(tau, seg.t0, seg.t1)), u);
    };
    FlowResult fr = integrate_flow(field, s, seg.t0, seg.t1, seg.steps, flow);
    res.error_estimate += fr.error_estimate;
    res.times.insert(res.times.end(), fr.times.begin(), fr.times.end());
    res.states.insert(res.states.end(), fr.states.begin(), fr.states.end());
    s = fr.end;
  }
  res.end_chart = state.chart;
  if (auto psi = end_transition(conn, c, t, state, options)) {
    s = sys.eta(state.chart).apply_acting(*psi, s);
    sys.fiber().normalize(s);
    res.end_chart = *options.end_chart;
  }
  res.end = s;
  return res;
}

TransportResult transport_group(const Connection& conn, const Curve& c, double t, const Vec& u0, int steps,
                                const TransportOptions& options) {
  const SystemSpec& sys = conn.system();
  check_start(conn, u0);
  TransportResult res;
  res.segments = plan_segments(conn, c, t, steps, options.start_chart);
  StartState state = start_state(conn, c, res.segments, options.start_chart);

  const Representation& first = sys.eta(state.chart);
  GroupElement g = GroupElement::identity(first.matrix_size(), first.group_kind());
  GroupPath path;
  if (res.segments.empty()) {
    path.times.push_back(c.t0());
    path.elements.push_back(g);
  }
  for (std::size_t i = 0; i < res.segments.size(); ++i) {
    const TransportSegment& seg = res.segments[i];
    if (i > 0) {
      const Mat psi = sys.transition(seg.chart, state.chart, c(seg.t0) + state.shift);
      g = g * GroupElement::from_acting(psi, g.kind());
    }
    state = {seg.chart, seg.shift};
    const Splitting& sigma = conn.splitting();
    auto xi = [&](double tau) { return sigma.apply(seg.chart, c(tau) + seg.shift, c.derivative_within(tau, seg.t0, seg.t1)); };
    GroupPath piece = integrate_left_invariant(sys.eta(seg.chart), xi, seg.t0, seg.t1, seg.steps, g);
    g = piece.elements.back();
    path.times.insert(path.times.end(), piece.times.begin(), piece.times.end());
    path.elements.insert(path.elements.end(), piece.elements.begin(), piece.elements.end());
  }
  res.end_chart = state.chart;
  if (auto psi = end_transition(conn, c, t, state, options)) {
    g = g * GroupElement::from_acting(*psi, g.kind());
    path.times.push_back(t);
    path.elements.push_back(g);
    res.end_chart = *options.end_chart;
  }
  const Mat acting = g.acting();
  Vec end = first.apply_acting(acting, u0);
  sys.fiber().normalize(end);
  res.end = end;
  res.acting = acting;
  if (options.record) {
    for (std::size_t i = 0; i < path.elements.size(); ++i) {
      Vec s = first.apply_acting(path.elements[i].acting(), u0);
      sys.fiber().normalize(s);
      res.times.push_back(path.times[i]);
      res.states.push_back(s);
    }
  }
  res.group = std::move(path);
  return res;
}

// ---------------------------------------------------------------------------
// Curvature

CurvatureValue curvature_formula(const Connection& conn, int chart, const Vec& x, const Vec& x1, const Vec& x2) {
  const SystemSpec& sys = conn.system();
  sys.require_in_chart(chart, x);
  const int m = sys.base_dim();
  if (x1.size() != m || x2.size() != m) throw DimensionMismatch("base tangents have the wrong dimension");
  const Splitting& sigma = conn.splitting();
  const Mat s = sigma.value(chart, x);
  Vec v = sys.algebra().bracket(s * x1, s * x2);
  for (int j = 0; j < m; ++j) {
    if (x1(j) == 0.0 && x2(j) == 0.0) continue;
    const Mat dj = sigma.partial(chart, x, j);
    v += x1(j) * (dj * x2) - x2(j) * (dj * x1);
  }
  return {v, fundamental_field(sys.eta(chart), v)};
}

Vec curvature_bracket(const Connection& conn, int chart, const Vec& x, const Vec& x1, const Vec& x2, const Vec& e,
                      double fd_scale) {
  const SystemSpec& sys = conn.system();
  sys.require_in_chart(chart, x);
  const int m = sys.base_dim();
  const int k = sys.fiber_dim();
  if (e.size() != k) throw DimensionMismatch("fiber point has the wrong dimension");
  const VectorField h1 = horizontal_lift_field(conn, chart, x1, fd_scale);
  const VectorField h2 = horizontal_lift_field(conn, chart, x2, fd_scale);
  Vec p(m + k);
  p << x, e;
  const Vec br = lie_bracket(h1, h2, p);
  return vertical_projection(conn, chart, x, e, TangentE{br.head(m), br.tail(k)});
}

// ---------------------------------------------------------------------------
// Holonomy

HolonomyResult holonomy_loop(const Connection& conn, const Curve& c, const Vec& u0, int steps,
                             std::optional<int> chart) {
  const BaseAtlas& atlas = conn.system().base();
  Vec gap = c(c.t1()) - c(c.t0());
  for (int j = 0; j < gap.size(); ++j) {
    if (atlas.period()(j) > 0.0) gap(j) -= atlas.period()(j) * std::round(gap(j) / atlas.period()(j));
  }
  if (gap.norm() > 1e-12) throw DomainError("holonomy needs a closed curve");
  const int start = chart ? *chart : atlas.best_chart(c(c.t0()));
  TransportOptions options;
  options.start_chart = start;
  options.end_chart = start;
  HolonomyResult out;
  out.transport = transport_direct(conn, c, c.t1(), u0, steps, options);
  options.estimate_error = false;
  const TransportResult group = transport_group(conn, c, c.t1(), u0, steps, options);
  out.acting = *group.acting;
  out.element = GroupElement::from_acting(out.acting, conn.system().eta(start).group_kind());
  return out;
}

Vec holonomy_log(const Connection& conn, int chart, const Mat& acting) {
  const Representation& rep = conn.system().eta(chart);
  Eigen::EigenSolver<Mat> eig(acting, false);
  for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
    const std::complex<double> lambda = eig.eigenvalues()(i);
    if (std::abs(std::arg(lambda)) > M_PI - 1e-9) {
      throw LogBranchError("holonomy has an eigenvalue on the negative real axis; shrink the loop");
    }
  }
  double residual = 0.0;
  const Vec coords = rep.field_coordinates(matrix_log(acting), residual);
  if (residual > 1e-6) throw BasisProjectionError("holonomy logarithm is not in the algebra", residual);
  return coords;
}

Vec ad_transport(const Connection& conn, const TransportResult& group_transport, const Vec& v, double gate) {
  if (!group_transport.acting) throw DomainError("ad_transport needs a group transport");
  const SystemSpec& sys = conn.system();
  const int start = group_transport.segments.empty() ? group_transport.end_chart : group_transport.segments.front().chart;
  const Mat& acting = *group_transport.acting;
  const Mat conj = acting.inverse() * sys.eta(group_transport.end_chart).augmented_field(v) * acting;
  double residual = 0.0;
  Vec w = sys.eta(start).field_coordinates(conj, residual);
  if (residual > gate) throw BasisProjectionError("transported curvature left the algebra", residual);
  return w;
}

HolonomyAlgebraEstimate holonomy_algebra_sample(const Connection& conn, const std::vector<Curve>& paths, int steps,
                                                double gate, double rank_threshold) {
  const SystemSpec& sys = conn.system();
  const int m = sys.base_dim();
  const int d = sys.algebra_dim();
  HolonomyAlgebraEstimate est;
  est.basis = Mat::Zero(d, 0);
  if (paths.empty()) return est;
  const Vec x0 = paths.front()(paths.front().t0());
  const int c0 = sys.base().best_chart(x0);
  std::mt19937_64 rng(0);
  const Vec u0 = sys.fiber().sample(rng);
  for (const Curve& path : paths) {
    if ((path(path.t0()) - x0).norm() > 1e-12) throw DomainError("holonomy paths must share their start point");
    TransportOptions options;
    options.start_chart = c0;
    options.estimate_error = false;
    const TransportResult tr = transport_group(conn, path, path.t1(), u0, steps, options);
    const Vec shift = tr.segments.empty() ? *sys.base().chart_shift(c0, x0) : tr.segments.back().shift;
    const Vec xe = path(path.t1()) + shift;
    for (int i = 0; i < m; ++i) {
      for (int j = i + 1; j < m; ++j) {
        const Vec r = curvature_formula(conn, tr.end_chart, xe, Vec::Unit(m, i), Vec::Unit(m, j)).v;
        est.samples.push_back(ad_transport(conn, tr, r, gate));
      }
    }
  }
  if (est.samples.empty()) return est;
  Mat stacked(d, static_cast<Eigen::Index>(est.samples.size()));
  for (std::size_t i = 0; i < est.samples.size(); ++i) stacked.col(static_cast<Eigen::Index>(i)) = est.samples[i];
  Eigen::JacobiSVD<Mat> svd(stacked, Eigen::ComputeThinU);
  const Vec sv = svd.singularValues();
  const double top = sv.size() > 0 ? sv(0) : 0.0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    est.singular_values.push_back(sv(i));
    if (top > 1e-14 && sv(i) > rank_threshold * top) ++est.rank;
  }
  est.basis = svd.matrixU().leftCols(est.rank);
  return est;
}

double ad_pullback_check(const Connection& conn, const Curve& c, double t, const Vec& v,
                         const std::vector<Vec>& sample_points, int steps, double fd_step) {
  const SystemSpec& sys = conn.system();
  if (sample_points.empty()) return 0.0;
  TransportOptions options;
  options.estimate_error = false;
  const TransportResult group = transport_group(conn, c, t, sample_points.front(), steps, options);
  const int start = group.segments.empty() ? group.end_chart : group.segments.front().chart;
  const Vec w = ad_transport(conn, group, v, 1e-6);
  options.start_chart = start;
  options.end_chart = group.end_chart;
  auto transport = [&](const Vec& s) { return transport_direct(conn, c, t, s, steps, options).end; };
  double worst = 0.0;
  for (const Vec& s : sample_points) {
    const Mat basis = sys.fiber().tangent_basis(s);
    const Vec p = transport(s);
    Mat dp(p.size(), basis.cols());
    for (Eigen::Index j = 0; j < basis.cols(); ++j) {
      dp.col(j) = (transport(s + fd_step * basis.col(j)) - transport(s - fd_step * basis.col(j))) / (2.0 * fd_step);
    }
    const Vec target = sys.eta(group.end_chart).eval(v, p);
    const Vec pulled = basis * dp.colPivHouseholderQr().solve(target);
    worst = std::max(worst, (pulled - sys.eta(start).eval(w, s)).norm());
  }
  return worst;
}

Claim2Report claim2_check(const Connection& conn, int chart, const Vec& x, const Vec& dir_x, const Vec& dir_y,
                          const std::vector<double>& t_grid, const std::vector<double>& s_grid,
                          const std::vector<Vec>& fiber_points, int steps_per_leg, double dt) {
  const SystemSpec& sys = conn.system();
  sys.require_in_chart(chart, x);
  if (fiber_points.empty()) throw DomainError("claim2_check needs fiber points");
  const int m = sys.base_dim();
  const int k = sys.fiber_dim();
  const int d = sys.algebra_dim();
  const Representation& rep = sys.eta(chart);
  const VectorField hx = horizontal_lift_field(conn, chart, dir_x);
  const VectorField hy = horizontal_lift_field(conn, chart, dir_y);
  FlowOptions flow;
  flow.estimate_error = false;
  const auto n = static_cast<Eigen::Index>(fiber_points.size());

  Claim2Report report;
  for (double t : t_grid) {
    for (double s : s_grid) {
      Mat a(k * n, d);
      Vec b(k * n);
      double base_drift = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        Vec p(m + k);
        p << x, fiber_points[j];
        const Vec plus = flow_commutator(hx, hy, p, t + dt, s, steps_per_leg, flow);
        const Vec minus = flow_commutator(hx, hy, p, t - dt, s, steps_per_leg, flow);
        const Vec q = flow_commutator(hx, hy, p, t, s, steps_per_leg, flow).tail(k);
        const Vec z = (plus - minus) / (2.0 * dt);
        base_drift = std::max(base_drift, z.head(m).norm());
        b.segment(j * k, k) = z.tail(k);
        report.max_field = std::max(report.max_field, z.tail(k).norm());
        for (int i = 0; i < d; ++i) a.block(j * k, i, k, 1) = rep.eval(Vec::Unit(d, i), q);
      }
      const Vec coeff = a.colPivHouseholderQr().solve(b);
      const Vec misfit = a * coeff - b;
      double worst = base_drift;
      for (Eigen::Index j = 0; j < n; ++j) worst = std::max(worst, misfit.segment(j * k, k).norm());
      report.residual = std::max(report.residual, worst);
      report.coefficients.push_back(coeff);
    }
  }
  return report;
}

SmallLoopEstimate small_loop_limit(const Connection& conn, int chart, const Vec& x, const Vec& x1, const Vec& x2,
                                   const std::vector<double>& epsilons, int steps) {
  if (epsilons.size() < 3) throw DomainError("small_loop_limit needs at least three loop sizes");
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (!(epsilons[i] > 0.0) || (i > 0 && epsilons[i] >= epsilons[i - 1])) {
      throw DomainError("loop sizes must be positive and decreasing");
    }
  }
  const SystemSpec& sys = conn.system();
  sys.require_in_chart(chart, x);
  std::mt19937_64 rng(0);
  const Vec u0 = sys.fiber().sample(rng);
  SmallLoopEstimate est;
  for (double eps : epsilons) {
    const Curve loop = Curve::polyline({x, x + eps * x1, x + eps * (x1 + x2), x + eps * x2, x});
    TransportOptions options;
    options.start_chart = chart;
    options.end_chart = chart;
    options.estimate_error = false;
    const Mat g = *transport_group(conn, loop, loop.t1(), u0, steps, options).acting;
    const Mat dev = g - Mat::Identity(g.rows(), g.cols());
    if (Eigen::JacobiSVD<Mat>(dev).singularValues()(0) >= 1.0) {
      throw LogBranchError("holonomy too far from the identity for the principal logarithm; shrink eps");
    }
    est.raw.push_back(holonomy_log(conn, chart, g) / (eps * eps));
  }
  const auto n = static_cast<Eigen::Index>(epsilons.size());
  Mat design(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) design.row(i) << 1.0, epsilons[i], epsilons[i] * epsilons[i];
  Mat values(n, est.raw.front().size());
  for (Eigen::Index i = 0; i < n; ++i) values.row(i) = est.raw[i].transpose();
  est.value = design.colPivHouseholderQr().solve(values).row(0).transpose();
  const double d01 = (est.raw[0] - est.raw[1]).norm();
  const double d12 = (est.raw[1] - est.raw[2]).norm();
  if (d01 > 1e-13 && d12 > 1e-13) est.observed_order = std::log(d01 / d12) / std::log(epsilons[0] / epsilons[1]);
  return est;
}

void write_trace_csv(std::ostream& out, const Curve& c, const TransportResult& result) {
  const int m = c.dim();
  const int k = result.states.empty() ? 0 : static_cast<int>(result.states.front().size());
  const bool with_group = result.group && result.group->elements.size() == result.times.size();
  const int n = with_group && !result.group->elements.empty() ? result.group->elements.front().size() : 0;
  out << "t";
  for (int i = 0; i < m; ++i) out << ",x" << i;
  for (int i = 0; i < k; ++i) out << ",s" << i;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) out << ",g" << i << j;
  }
  out << "\n" << std::setprecision(17);
  for (std::size_t r = 0; r < result.times.size(); ++r) {
    const double t = result.times[r];
    out << t;
    const Vec x = c(t);
    for (int i = 0; i < m; ++i) out << "," << x(i);
    for (int i = 0; i < k; ++i) out << "," << result.states[r](i);
    if (with_group) {
      const Mat& g = result.group->elements[r].matrix();
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) out << "," << g(i, j);
      }
    }
    out << "\n";
  }
}

}  // namespace fibersys
