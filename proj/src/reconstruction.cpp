#include "fibersys/reconstruction.hpp"

#include <Eigen/QR>
#include <cmath>
#include <memory>

namespace fibersys {

namespace {

Vec fiber_anchor(const SystemSpec& sys) {
  std::mt19937_64 rng(0);
  return sys.fiber().sample(rng);
}

Mat group_acting(const Connection& conn, const Curve& c, int start, int end, int steps) {
  TransportOptions options;
  options.start_chart = start;
  options.end_chart = end;
  options.estimate_error = false;
  return *transport_group(conn, c, c.t1(), fiber_anchor(conn.system()), steps, options).acting;
}

double identity_gap(const Mat& a) { return (a - Mat::Identity(a.rows(), a.cols())).norm(); }

// Points of a chart near its centre; chart boxes may be far larger than the
// region where long radial transports stay accurate.
std::vector<Vec> near_center(const BaseAtlas& base, int chart, int count, std::mt19937_64& rng) {
  const Box& box = base.box(chart);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<Vec> out;
  for (int n = 0; n < count; ++n) {
    Vec x = box.center();
    for (int j = 0; j < x.size(); ++j) x(j) += std::min(2.0, 0.45 * (box.hi(j) - box.lo(j))) * unit(rng);
    out.push_back(x);
  }
  return out;
}

std::vector<double> to_list(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

nlohmann::json to_rows(const Mat& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < m.rows(); ++i) rows.push_back(to_list(m.row(i).transpose()));
  return rows;
}

}  // namespace

RadialAtlas::RadialAtlas(const BaseAtlas& base, const Vec& x0)
    : base_(base), x0_(x0), x0_chart_(base.best_chart(x0)), period_(base.period()) {
  for (int a = 0; a < base.chart_count(); ++a) {
    centers_.push_back(base.center(a));
    base_curves_.push_back(Curve::segment(x0, centers_.back()));
  }
}

Curve RadialAtlas::radial(int chart, const Vec& x) const {
  const std::optional<Vec> xc = base_.to_chart(chart, x);
  if (!xc) throw ChartMismatch("point is outside chart " + std::to_string(chart));
  return Curve::radial(center(chart), *xc);
}

Mat build_bundle_atlas(const Connection& conn, const RadialAtlas& ratlas, int chart, const Vec& x, int steps) {
  const Curve path = Curve::concatenate({ratlas.base_curve(chart), ratlas.radial(chart, x)}, ratlas.period());
  return group_acting(conn, path, ratlas.x0_chart(), chart, steps);
}

Mat cocycle_element(const Connection& conn, const RadialAtlas& ratlas, int to, int from, const Vec& x, int steps) {
  const Curve loop = Curve::concatenate({ratlas.base_curve(from), ratlas.radial(from, x), ratlas.radial(to, x).reversed(),
                                         ratlas.base_curve(to).reversed()},
                                        ratlas.period());
  return group_acting(conn, loop, ratlas.x0_chart(), ratlas.x0_chart(), steps);
}

double Cocycle::worst() const { return std::max({identity_residual, inverse_residual, triple_residual}); }

Cocycle build_cocycle(const Connection& conn, const RadialAtlas& ratlas, const ReconstructionOptions& options) {
  const SystemSpec& sys = conn.system();
  const BaseAtlas& base = sys.base();
  const int n = base.chart_count();
  const int steps = options.steps;
  std::mt19937_64 rng(options.seed);
  Cocycle out;
  double worst = -1.0;
  auto note = [&](double residual, const Vec& x) {
    if (residual > worst) {
      worst = residual;
      out.worst_sample = x;
    }
  };

  for (int a = 0; a < n; ++a) {
    for (const Vec& x : near_center(base, a, std::max(1, options.samples_per_overlap / 4), rng)) {
      const double r = identity_gap(cocycle_element(conn, ratlas, a, a, x, steps));
      out.identity_residual = std::max(out.identity_residual, r);
      note(r, x);
    }
  }

  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      const std::vector<Vec> pts = base.sample_overlap({a, b}, options.samples_per_overlap, rng);
      for (const Vec& x : pts) {
        const Vec xb = *base.to_chart(b, x);
        const Mat ba = cocycle_element(conn, ratlas, b, a, x, steps);
        const Mat ab = cocycle_element(conn, ratlas, a, b, xb, steps);
        const double inv = identity_gap(ab * ba);
        out.inverse_residual = std::max(out.inverse_residual, inv);
        note(inv, x);
        const Mat ba_atlas = build_bundle_atlas(conn, ratlas, b, x, steps).inverse() * sys.transition(b, a, x) *
                             build_bundle_atlas(conn, ratlas, a, x, steps);
        const double atlas = (ba_atlas - ba).norm();
        out.atlas_residual = std::max(out.atlas_residual, atlas);
        out.samples.push_back({b, a, x, ba, inv, atlas});
        out.samples.push_back({a, b, xb, ab, inv, atlas});
      }
      if (pts.empty()) continue;
      auto shared = std::make_shared<const std::pair<Connection, RadialAtlas>>(conn, ratlas);
      out.transitions.push_back({b, a, [shared, a, b, steps](const Vec& x) {
                                   return cocycle_element(shared->first, shared->second, b, a, x, steps);
                                 }});
      out.transitions.push_back({a, b, [shared, a, b, steps](const Vec& x) {
                                   return cocycle_element(shared->first, shared->second, a, b, x, steps);
                                 }});
    }
  }

  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      for (int c = b + 1; c < n; ++c) {
        for (const Vec& x : base.sample_overlap({a, b, c}, options.samples_per_overlap, rng)) {
          const Vec xb = *base.to_chart(b, x);
          const Vec xc = *base.to_chart(c, x);
          const Mat loop = cocycle_element(conn, ratlas, a, c, xc, steps) * cocycle_element(conn, ratlas, c, b, xb, steps) *
                           cocycle_element(conn, ratlas, b, a, x, steps);
          const double r = identity_gap(loop);
          out.triple_residual = std::max(out.triple_residual, r);
          note(r, x);
        }
      }
    }
  }

  if (out.worst() > options.tolerance) {
    throw CocycleViolation("reconstructed transition functions do not form a cocycle", out.worst(), out.worst_sample);
  }
  return out;
}

FundamentalProjection fundamental_field_projection(const SystemSpec& sys, int chart, const VectorField& field,
                                                   int samples, std::uint64_t seed, double gate) {
  const Representation& rep = sys.eta(chart);
  const int k = sys.fiber_dim();
  const int d = rep.algebra_dim();
  if (field.dim() != k) throw DimensionMismatch("field does not live on the fiber");
  std::mt19937_64 rng(seed);
  std::vector<Vec> pts;
  for (int n = 0; n < samples; ++n) pts.push_back(sys.fiber().sample(rng));
  Mat a(k * samples, d);
  Vec rhs(k * samples);
  double scale = 1.0;
  for (int n = 0; n < samples; ++n) {
    for (int i = 0; i < d; ++i) a.block(n * k, i, k, 1) = rep.eval(Vec::Unit(d, i), pts[n]);
    rhs.segment(n * k, k) = field(pts[n]);
    scale = std::max(scale, rhs.segment(n * k, k).norm());
  }
  FundamentalProjection out;
  out.coefficients = a.colPivHouseholderQr().solve(rhs);
  const Vec misfit = a * out.coefficients - rhs;
  for (int n = 0; n < samples; ++n) out.residual = std::max(out.residual, misfit.segment(n * k, k).norm());
  if (out.residual > gate * scale) {
    throw BasisProjectionError("field is not a fundamental field of the action", out.residual);
  }
  return out;
}

FundamentalProjection fundamental_field_projection(const Connection& conn, int chart, const Vec& x, const Vec& xi,
                                                   int samples, std::uint64_t seed, double gate) {
  return fundamental_field_projection(conn.system(), chart, christoffel(conn, chart, x, xi), samples, seed, gate);
}

AssociatedRoundTrip associated_round_trip(const Connection& conn, const Vec& x0, const ReconstructionOptions& options) {
  const SystemSpec& sys = conn.system();
  RadialAtlas ratlas(sys.base(), x0);
  Cocycle cocycle = build_cocycle(conn, ratlas, options);
  const Representation& action = sys.eta(ratlas.x0_chart());
  SystemSpec assoc = build_associated_system(sys.base(), cocycle.transitions, action, sys.fiber(),
                                             options.samples_per_overlap, options.tolerance, options.seed);

  const int m = sys.base_dim();
  const int d = assoc.algebra_dim();
  const int steps = options.steps;
  auto shared = std::make_shared<const std::pair<Connection, RadialAtlas>>(conn, ratlas);
  std::vector<Splitting::Value> values;
  for (int a = 0; a < sys.base().chart_count(); ++a) {
    values.push_back([shared, a, m, d, steps, action](const Vec& x) {
      const Connection& c = shared->first;
      const RadialAtlas& ra = shared->second;
      const double h = 1e-4;
      const Mat b = build_bundle_atlas(c, ra, a, x, steps);
      const Mat b_inv = b.inverse();
      Mat out(d, m);
      for (int j = 0; j < m; ++j) {
        auto at = [&](double offset) {
          Vec y = x;
          y(j) += offset;
          return build_bundle_atlas(c, ra, a, y, steps);
        };
        const Box& box = c.system().base().box(a);
        Mat db;
        if (x(j) + h > box.hi(j)) {
          db = (3 * b - 4 * at(-h) + at(-2 * h)) / (2 * h);
        } else if (x(j) - h < box.lo(j)) {
          db = (-3 * b + 4 * at(h) - at(2 * h)) / (2 * h);
        } else {
          db = (at(h) - at(-h)) / (2 * h);
        }
        const Mat field = b_inv * christoffel_matrix(c, a, x, Vec::Unit(m, j)) * b - b_inv * db;
        double residual = 0.0;
        out.col(j) = action.field_coordinates(field, residual);
        if (residual > 1e-6) throw BasisProjectionError("gauge-transformed splitting leaves the algebra", residual);
      }
      return out;
    });
  }
  return {std::move(ratlas), std::move(cocycle), Connection(assoc, Splitting::functional(m, d, values)), steps};
}

double AssociatedRoundTrip::compare(const Connection& original, const Curve& c, double t, const Vec& e0,
                                    int transport_steps) const {
  const BaseAtlas& base = original.system().base();
  const int start = base.best_chart(c(c.t0()));
  TransportOptions options;
  options.start_chart = start;
  options.estimate_error = false;
  const TransportResult direct = transport_direct(original, c, t, e0, transport_steps, options);
  const int end = direct.end_chart;
  options.end_chart = end;

  const Representation& action = conn.system().eta(0);
  const Vec x_start = *base.to_chart(start, c(c.t0()));
  const Vec x_end = *base.to_chart(end, c(t));
  Vec s0 = action.apply_acting(build_bundle_atlas(original, ratlas, start, x_start, steps).inverse(), e0);
  conn.system().fiber().normalize(s0);
  const TransportResult via = transport_direct(conn, c, t, s0, transport_steps, options);
  Vec e1 = action.apply_acting(build_bundle_atlas(original, ratlas, end, x_end, steps), via.end);
  original.system().fiber().normalize(e1);
  return original.system().fiber().distance(direct.end, e1);
}

nlohmann::json reconstruction_report(const Connection& conn, const RadialAtlas& ratlas, const Cocycle& cocycle) {
  nlohmann::json out;
  out["charts"] = ratlas.chart_count();
  out["x0"] = to_list(ratlas.x0());
  out["identity_residual"] = cocycle.identity_residual;
  out["inverse_residual"] = cocycle.inverse_residual;
  out["triple_residual"] = cocycle.triple_residual;
  out["atlas_residual"] = cocycle.atlas_residual;

  std::map<std::pair<int, int>, std::pair<double, double>> per_overlap;
  nlohmann::json samples = nlohmann::json::array();
  for (const CocycleSample& s : cocycle.samples) {
    auto& w = per_overlap[{s.to, s.from}];
    w.first = std::max(w.first, s.inverse_residual);
    w.second = std::max(w.second, s.atlas_residual);
    samples.push_back({{"to", s.to}, {"from", s.from}, {"x", to_list(s.x)}, {"element", to_rows(s.acting)}});
  }
  nlohmann::json overlaps = nlohmann::json::array();
  for (const auto& [key, w] : per_overlap) {
    overlaps.push_back({{"to", key.first}, {"from", key.second}, {"inverse_residual", w.first}, {"atlas_residual", w.second}});
  }
  out["overlaps"] = overlaps;
  out["samples"] = samples;

  nlohmann::json projections = nlohmann::json::array();
  const int m = conn.system().base_dim();
  for (int a = 0; a < ratlas.chart_count(); ++a) {
    for (int j = 0; j < m; ++j) {
      const FundamentalProjection p =
          fundamental_field_projection(conn, a, ratlas.center(a), Vec::Unit(m, j), 24, 0, 1e300);
      projections.push_back({{"chart", a}, {"direction", j}, {"coefficients", to_list(p.coefficients)}, {"residual", p.residual}});
    }
  }
  out["projections"] = projections;
  return out;
}

}  // namespace fibersys
