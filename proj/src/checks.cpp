#include "fibersys/checks.hpp"

#include "fibersys/reconstruction.hpp"
#include "fibersys/universal.hpp"

#include "json.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <tuple>

namespace fibersys {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct SkipCheck {
  std::string why;
};

// A check that failed for a reason other than its residual.
struct CheckFailure {
  double residual;
  std::string why;
};

std::uint64_t mix(std::uint64_t seed, const std::string& name) {
  std::uint64_t h = 1469598103934665603ull ^ seed;
  for (unsigned char c : name) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

class Runner {
 public:
  Runner(const Scenario& sc, const CheckOptions& options, Report& report)
      : sc_(sc), options_(options), tol_(sc.tol.scaled(options.tol_scale)), report_(report) {}

  const Scenario& sc() const { return sc_; }
  const SystemSpec& sys() const { return sc_.conn.system(); }
  const Connection& conn() const { return sc_.conn; }
  const Tolerances& tol() const { return tol_; }
  int steps() const { return options_.steps; }
  std::uint64_t seed() const { return options_.seed; }

  void set_suite(const std::string& suite) { suite_ = suite; }

  // `body` returns the residual and may write a note.
  void run(const std::string& name, double tolerance, const std::function<double(std::mt19937_64&, std::string&)>& body) {
    CheckEntry e;
    e.suite = suite_;
    e.name = name;
    e.tolerance = tolerance;
    std::mt19937_64 rng(mix(options_.seed, suite_ + "/" + name));
    const auto start = std::chrono::steady_clock::now();
    try {
      e.residual = body(rng, e.note);
      e.status = e.residual <= tolerance ? CheckStatus::Pass : CheckStatus::Fail;
    } catch (const SkipCheck& s) {
      e.status = CheckStatus::Skip;
      e.residual = 0.0;
      e.note = s.why;
    } catch (const CheckFailure& f) {
      e.status = CheckStatus::Fail;
      e.residual = f.residual;
      e.note = f.why;
    } catch (const EscapeDetected& x) {
      if (!sc_.expect.complete) {
        e.status = CheckStatus::Skip;
        e.note = std::string("escape expected by the scenario: ") + x.what();
      } else {
        e.status = CheckStatus::Fail;
        e.residual = kInf;
        e.note = x.what();
      }
    } catch (const std::exception& x) {
      e.status = CheckStatus::Fail;
      e.residual = kInf;
      e.note = x.what();
    }
    e.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    report_.entries.push_back(std::move(e));
  }

  // A base point near x0, with the chart it was taken in.
  std::pair<int, Vec> near_x0(std::mt19937_64& rng, double radius) const {
    std::uniform_real_distribution<double> u(-radius, radius);
    for (int attempt = 0; attempt < 100; ++attempt) {
      Vec x = sc_.x0;
      for (int j = 0; j < x.size(); ++j) x(j) += u(rng);
      for (int a = 0; a < sys().base().chart_count(); ++a) {
        if (sys().base().margin(a, x) > 1e-3) return {a, *sys().base().to_chart(a, x)};
      }
    }
    throw DomainError("no base point found near x0");
  }

  Curve random_curve(std::mt19937_64& rng, double size) const {
    std::uniform_real_distribution<double> u(-size, size);
    const int m = sys().base_dim();
    std::vector<Vec> coeffs{sc_.x0};
    for (int i = 0; i < 3; ++i) {
      Vec c(m);
      for (int j = 0; j < m; ++j) c(j) = u(rng);
      coeffs.push_back(c);
    }
    return Curve::polynomial(coeffs);
  }

  // Scenario curves followed by `extra` random ones from x0.
  std::vector<std::pair<std::string, Curve>> curves(std::mt19937_64& rng, int extra, double size = 0.5) const {
    std::vector<std::pair<std::string, Curve>> out(sc_.curves.begin(), sc_.curves.end());
    for (int i = 0; i < extra; ++i) out.emplace_back("random-" + std::to_string(i), random_curve(rng, size));
    return out;
  }

 private:
  const Scenario& sc_;
  CheckOptions options_;
  Tolerances tol_;
  Report& report_;
  std::string suite_;
};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

double indicator(bool ok) { return ok ? 0.0 : 1.0; }

// Runs `per_item` for every curve; curves that escape in an incomplete
// scenario, or leave a single chart when `single_chart`, are left out.
double over_curves(const Runner& r, const std::vector<std::pair<std::string, Curve>>& curves, std::string& note,
                   const std::function<double(const Curve&)>& per_item, bool single_chart = false) {
  double worst = 0.0;
  int used = 0;
  std::vector<std::string> left_out;
  for (const auto& [name, c] : curves) {
    try {
      worst = std::max(worst, per_item(c));
      ++used;
    } catch (const EscapeDetected&) {
      if (r.sc().expect.complete) throw;
      left_out.push_back(name);
    } catch (const ChartMismatch&) {
      if (!single_chart) throw;
      left_out.push_back(name);
    }
  }
  if (used == 0) throw SkipCheck{"no curve was usable"};
  note = "curves used: " + std::to_string(used);
  if (!left_out.empty()) {
    note += ", left out:";
    for (const std::string& n : left_out) note += " " + n;
  }
  return worst;
}

void system_suite(Runner& r) {
  const SystemSpec& sys = r.sys();
  const Tolerances& tol = r.tol();
  r.run("jacobi", tol.jacobi, [&](auto&, auto&) { return sys.algebra().jacobi_residual(); });
  r.run("antisymmetry", tol.jacobi, [&](auto&, auto&) { return sys.algebra().antisymmetry_residual(); });
  r.run("homomorphism", tol.homomorphism, [&](auto& rng, auto&) { return representation_residual(sys, 32, rng()); });
  r.run("monic", 0.0, [&](auto& rng, std::string& note) {
    const MonicVerdict v = check_monic(sys, std::max(16, 4 * sys.algebra_dim()), rng());
    note = "smallest singular value ratio " + fmt(v.worst_ratio);
    return std::max(0.0, 1e-8 - v.worst_ratio);
  });
  r.run("transition-compatibility", tol.transition,
        [&](auto& rng, auto&) { return transition_compatibility_residual(sys, 32, rng()); });
  r.run("bundle-cocycle", tol.cocycle, [&](auto& rng, auto&) { return bundle_cocycle_residual(sys, 32, rng()); });
  r.run("splitting-compatibility", tol.transition,
        [&](auto& rng, auto&) { return splitting_compatibility_residual(r.conn(), 32, rng()); });
  r.run("completeness", 0.0, [&](auto& rng, std::string& note) {
    const int chart = sys.base().best_chart(r.sc().x0);
    const Vec x = *sys.base().to_chart(chart, r.sc().x0);
    bool complete = true;
    for (int i = 0; i < sys.algebra_dim() && complete; ++i) {
      const CompletenessVerdict v = completeness_probe(sys, chart, x, Vec::Unit(sys.algebra_dim(), i), 10.0, 8, rng());
      if (!v.complete) {
        complete = false;
        note = "e" + std::to_string(i) + " escapes at t=" + fmt(v.escape_time);
      }
    }
    if (complete) note = "no escape up to |t| = 10";
    note += r.sc().expect.complete ? " (complete expected)" : " (incomplete expected)";
    return indicator(complete == r.sc().expect.complete);
  });
}

void transport_suite(Runner& r) {
  const Connection& conn = r.conn();
  const Tolerances& tol = r.tol();
  const int steps = r.steps();
  r.run("direct-vs-group", tol.transport_agreement, [&](auto& rng, std::string& note) {
    return over_curves(r, r.curves(rng, 4), note, [&](const Curve& c) {
      const Vec u0 = r.sys().fiber().sample(rng);
      const TransportResult a = transport_direct(conn, c, c.t1(), u0, steps);
      const TransportResult b = transport_group(conn, c, c.t1(), u0, steps);
      return r.sys().fiber().distance(a.end, b.end);
    });
  });
  r.run("reparametrization", tol.transport_agreement, [&](auto& rng, std::string& note) {
    return over_curves(r, r.curves(rng, 2), note, [&](const Curve& c) {
      const Vec u0 = r.sys().fiber().sample(rng);
      const double t0 = c.t0(), len = c.t1() - c.t0();
      const Curve slow = c.reparametrized(0.0, 1.0, [t0, len](double s) { return t0 + len * s * s; },
                                          [len](double s) { return 2 * len * s; });
      const TransportResult a = transport_direct(conn, c, c.t1(), u0, steps);
      const TransportResult b = transport_direct(conn, slow, 1.0, u0, 2 * steps);
      return r.sys().fiber().distance(a.end, b.end);
    });
  });
  r.run("escape-time", tol.escape_time, [&](auto&, std::string& note) -> double {
    const auto& e = r.sc().expect.escape;
    if (!e) throw SkipCheck{"the scenario declares no escape"};
    const Curve& c = r.sc().curve(e->curve);
    try {
      transport_direct(conn, c, c.t1(), e->u0, steps);
    } catch (const EscapeDetected& x) {
      note = "escaped at t=" + fmt(x.time()) + ", expected " + fmt(e->time);
      return std::abs(x.time() - e->time);
    }
    throw CheckFailure{kInf, "no escape along '" + e->curve + "'"};
  });
  r.run("parent-complete", 0.0, [&](auto& rng, std::string& note) -> double {
    const std::string& parent_name = r.sc().expect.parent;
    if (parent_name.empty()) throw SkipCheck{"the scenario names no parent"};
    const Scenario parent = load_scenario(parent_name);
    const Vec u0 = r.sc().expect.escape ? r.sc().expect.escape->u0 : parent.conn.system().fiber().sample(rng);
    double longest = 0.0;
    for (const auto& [name, c] : parent.curves) {
      const TransportResult tr = transport_direct(parent.conn, c, c.t1(), u0, std::max(steps, 100 * static_cast<int>(std::ceil(c.t1() - c.t0()))));
      longest = std::max(longest, (c(c.t1()) - c(c.t0())).norm());
      if (!tr.end.allFinite()) return 1.0;
    }
    note = parent_name + ": no escape, longest displacement " + fmt(longest);
    return 0.0;
  });
}

void curvature_suite(Runner& r) {
  const Connection& conn = r.conn();
  const SystemSpec& sys = r.sys();
  const Tolerances& tol = r.tol();
  const int m = sys.base_dim();
  r.run("bracket-vs-formula", tol.curvature, [&](auto& rng, auto&) {
    std::normal_distribution<double> g;
    double worst = 0.0;
    for (int n = 0; n < 20; ++n) {
      const auto [chart, x] = r.near_x0(rng, 1.0);
      Vec x1(m), x2(m);
      for (int j = 0; j < m; ++j) {
        x1(j) = g(rng);
        x2(j) = g(rng);
      }
      const Vec e = sys.fiber().sample(rng);
      const Vec formula = curvature_formula(conn, chart, x, x1, x2).as_field(e);
      worst = std::max(worst, (curvature_bracket(conn, chart, x, x1, x2, e) - formula).norm());
    }
    return worst;
  });
  r.run("small-loop", tol.small_loop, [&](auto&, std::string& note) {
    if (m < 2) throw SkipCheck{"one-dimensional base"};
    const int chart = sys.base().best_chart(r.sc().x0);
    const Vec x = *sys.base().to_chart(chart, r.sc().x0);
    const Vec e0 = Vec::Unit(m, 0), e1 = Vec::Unit(m, 1);
    const SmallLoopEstimate est = small_loop_limit(conn, chart, x, e0, e1, {0.2, 0.1, 0.05}, std::max(800, r.steps()));
    const double err = (est.value - curvature_formula(conn, chart, x, e0, e1).v).norm();
    double spread = 0.0;
    for (const Vec& v : est.raw) spread = std::max(spread, (v - est.raw.back()).norm());
    note = "observed order " + fmt(est.observed_order);
    if (spread > 1e-12 && est.observed_order < 1.0) throw CheckFailure{err, note + " is below 1"};
    return err;
  });
  r.run("claim2", tol.claim2, [&](auto& rng, std::string& note) {
    if (m < 2) throw SkipCheck{"one-dimensional base"};
    const int chart = sys.base().best_chart(r.sc().x0);
    const Vec x = *sys.base().to_chart(chart, r.sc().x0);
    const std::vector<double> grid{0.05, 0.1, 0.15, 0.2, 0.25};
    std::vector<Vec> pts;
    for (int i = 0; i < 3; ++i) pts.push_back(sys.fiber().sample(rng));
    const Claim2Report rep = claim2_check(conn, chart, x, Vec::Unit(m, 0), Vec::Unit(m, 1), grid, grid, pts);
    note = "largest field " + fmt(rep.max_field);
    return rep.residual;
  });
}

void holonomy_suite(Runner& r) {
  const Connection& conn = r.conn();
  const SystemSpec& sys = r.sys();
  const Tolerances& tol = r.tol();
  const int steps = r.steps();
  r.run("expected-log", tol.holonomy_angle, [&](auto&, std::string& note) {
    const auto& h = r.sc().expect.holonomy;
    if (!h) throw SkipCheck{"the scenario declares no holonomy"};
    const Curve& c = r.sc().curve(h->curve);
    const int segments = std::max<int>(1, static_cast<int>(c.breakpoints().size()) + 1);
    const HolonomyResult hol = holonomy_loop(conn, c, h->u0, std::max(steps, 1000 * segments));
    const Vec log = holonomy_log(conn, hol.transport.end_chart, hol.acting);
    note = "log";
    for (int i = 0; i < log.size(); ++i) note += " " + fmt(log(i));
    return (log - h->log).norm();
  });
  r.run("membership", tol.membership, [&](auto& rng, auto& note) {
    return over_curves(r, r.curves(rng, 2), note, [&](const Curve& c) {
      const TransportResult tr = transport_group(conn, c, c.t1(), sys.fiber().sample(rng), steps);
      double worst = 0.0;
      for (const GroupElement& g : tr.group->elements) worst = std::max(worst, g.membership_residual());
      return worst;
    });
  });
  r.run("algebra-sample", 0.0, [&](auto& rng, std::string& note) {
    std::vector<Curve> paths;
    for (int i = 0; i < 6; ++i) {
      const auto [chart, x] = r.near_x0(rng, 1.0);
      (void)chart;
      Vec end = x;
      // Express the end point in the covering coordinates of x0.
      for (int j = 0; j < end.size(); ++j) {
        const double p = sys.base().period().size() > j ? sys.base().period()(j) : 0.0;
        if (p > 0.0) end(j) -= p * std::round((end(j) - r.sc().x0(j)) / p);
      }
      paths.push_back(Curve::segment(r.sc().x0, end));
    }
    try {
      const HolonomyAlgebraEstimate est = holonomy_algebra_sample(conn, paths, steps, tol.membership);
      note = "rank " + std::to_string(est.rank);
    } catch (const BasisProjectionError& e) {
      throw CheckFailure{e.residual(), e.what()};
    }
    return 0.0;
  });
  r.run("ad-pullback", tol.ad_pullback, [&](auto& rng, auto& note) {
    std::normal_distribution<double> g;
    return over_curves(r, r.curves(rng, 3, 0.4), note, [&](const Curve& c) {
      Vec v(sys.algebra_dim());
      for (int i = 0; i < v.size(); ++i) v(i) = g(rng);
      std::vector<Vec> pts;
      for (int i = 0; i < 3; ++i) pts.push_back(sys.fiber().sample(rng));
      return ad_pullback_check(conn, c, c.t1(), v, pts, steps);
    });
  });
}

Splitting doubled(const Connection& conn) {
  const Splitting sigma = conn.splitting();
  std::vector<Splitting::Value> values;
  const int n = conn.system().base().chart_count();
  for (int a = 0; a < n; ++a) values.push_back([sigma, a](const Vec& x) { return Mat(2.0 * sigma.value(a, x)); });
  if (n == 1) values.resize(1);
  return Splitting::functional(sigma.base_dim(), sigma.algebra_dim(), values);
}

void universal_suite(Runner& r) {
  const Connection& conn = r.conn();
  const SystemSpec& sys = r.sys();
  const Tolerances& tol = r.tol();
  const int steps = r.steps();
  const int m = sys.base_dim();
  const int d = sys.algebra_dim();
  r.run("kappa-roundtrip", 1e-14, [&](auto& rng, auto&) {
    std::normal_distribution<double> g;
    double worst = 0.0;
    for (int n = 0; n < 20; ++n) {
      TangentC x;
      std::tie(x.foot.chart, x.foot.x) = r.near_x0(rng, 1.0);
      x.foot.s = Mat::NullaryExpr(d, m, [&] { return g(rng); });
      x.xi = Vec::NullaryExpr(m, [&] { return g(rng); });
      x.s_dot = Mat::NullaryExpr(d, m, [&] { return g(rng); });
      const Vec a = Vec::NullaryExpr(d, [&] { return g(rng); });
      const double scale = std::max(1.0, a.norm() + x.foot.s.norm() * x.xi.norm());
      worst = std::max(worst, (kappa(x, kappa_inv(x, a).h).a - a).norm() / scale);
    }
    return worst;
  });
  r.run("relatedness", tol.relatedness, [&](auto& rng, auto&) { return relatedness_check_43(conn, 100, rng()); });
  r.run("universal-vs-sigma", tol.universal_transport, [&](auto& rng, std::string& note) {
    return over_curves(
        r, r.curves(rng, 3), note,
        [&](const Curve& c) {
          const int chart = sys.base().best_chart(c(c.t0()));
          const Vec shift = *sys.base().chart_shift(chart, c(c.t0()));
          const Curve cc = c.shifted(shift);
          const Vec u0 = sys.fiber().sample(rng);
          TransportOptions options;
          options.start_chart = chart;
          const TransportResult direct = transport_direct(conn, cc, cc.t1(), u0, steps, options);
          const TransportResult uni =
              universal_transport(sys, CurveInC::of_splitting(conn.splitting(), chart, cc), cc.t1(), u0, steps);
          return sys.fiber().distance(direct.end, uni.end);
        },
        true);
  });
  // Rounding floor: sphere fibers are renormalised after every step.
  r.run("vertical-identity", 1e-14, [&](auto& rng, std::string& note) {
    std::normal_distribution<double> g;
    const auto [chart, x] = r.near_x0(rng, 0.5);
    const Mat s0 = Mat::NullaryExpr(d, m, [&] { return g(rng); });
    const Mat s1 = Mat::NullaryExpr(d, m, [&] { return g(rng); });
    const Vec e0 = sys.fiber().sample(rng);
    const TransportResult tr = universal_transport(sys, CurveInC::vertical(chart, x, s0, s1), 1.0, e0, steps);
    const double moved = (tr.end - e0).norm();
    note = "error estimate " + fmt(tr.error_estimate);
    return std::max(0.0, moved - tr.error_estimate);
  });
  r.run("via-universal", tol.via_universal, [&](auto& rng, std::string& note) {
    const Splitting tau = doubled(conn);
    const Connection tau_conn(sys, tau);
    return over_curves(
        r, r.curves(rng, 2), note,
        [&](const Curve& c) {
          const int chart = sys.base().best_chart(c(c.t0()));
          const Curve cc = c.shifted(*sys.base().chart_shift(chart, c(c.t0())));
          const Vec e0 = sys.fiber().sample(rng);
          const ViaUniversal via = transport_via_universal(sys, tau, conn.splitting(), chart, cc, cc.t1(), e0, steps);
          TransportOptions options;
          options.start_chart = chart;
          const TransportResult direct = transport_direct(tau_conn, cc, cc.t1(), e0, steps, options);
          if (direct.end_chart != chart) throw ChartMismatch("curve leaves its chart");
          return sys.fiber().distance(via.end, direct.end);
        },
        true);
  });
}

void reconstruction_suite(Runner& r) {
  const Connection& conn = r.conn();
  const SystemSpec& sys = r.sys();
  const Tolerances& tol = r.tol();
  const int steps = r.steps();
  const int m = sys.base_dim();
  r.run("fundamental-projection", tol.projection, [&](auto& rng, auto&) {
    double worst = 0.0;
    for (int n = 0; n < 10; ++n) {
      const auto [chart, x] = r.near_x0(rng, 1.0);
      for (int j = 0; j < m; ++j) {
        worst = std::max(worst, fundamental_field_projection(conn, chart, x, Vec::Unit(m, j), 24, rng(), kInf).residual);
      }
    }
    return worst;
  });

  std::optional<RadialAtlas> ratlas;
  std::optional<Cocycle> cocycle;
  r.run("cocycle", tol.cocycle, [&](auto& rng, std::string& note) {
    ratlas.emplace(sys.base(), r.sc().x0);
    ReconstructionOptions options;
    options.steps = steps;
    options.tolerance = kInf;
    options.seed = rng();
    cocycle = build_cocycle(conn, *ratlas, options);
    note = std::to_string(cocycle->samples.size()) + " overlap samples";
    return cocycle->worst();
  });
  r.run("atlas-consistency", tol.cocycle, [&](auto&, auto&) {
    if (!cocycle) throw CheckFailure{kInf, "no cocycle"};
    return cocycle->atlas_residual;
  });
  r.run("loop-holonomy", tol.cocycle, [&](auto&, std::string& note) {
    const auto& h = r.sc().expect.holonomy;
    if (!h) throw SkipCheck{"the scenario declares no holonomy"};
    if (m != 1) throw SkipCheck{"covered by round-trip on bases of dimension > 1"};
    if (!cocycle) throw CheckFailure{kInf, "no cocycle"};
    const Curve& c = r.sc().curve(h->curve);
    if ((c(c.t0()) - r.sc().x0).norm() > 1e-12) throw SkipCheck{"holonomy curve does not start at x0"};
    // On a one-dimensional base the reconstructed splitting vanishes, so the
    // loop holonomy is the product of the transition elements it crosses.
    const std::vector<TransportSegment> segs = plan_segments(conn, c, c.t1(), steps, ratlas->x0_chart());
    Mat composite = Mat::Identity(sys.eta(0).matrix_size(), sys.eta(0).matrix_size());
    for (std::size_t i = 1; i < segs.size(); ++i) {
      const Vec x = c(segs[i].t0) + segs[i - 1].shift;
      composite = cocycle_element(conn, *ratlas, segs[i].chart, segs[i - 1].chart, x, steps) * composite;
    }
    if (!segs.empty() && segs.back().chart != ratlas->x0_chart()) {
      const Vec x = c(c.t1()) + segs.back().shift;
      composite = cocycle_element(conn, *ratlas, ratlas->x0_chart(), segs.back().chart, x, steps) * composite;
    }
    const HolonomyResult hol = holonomy_loop(conn, c, h->u0, std::max(steps, 1000), ratlas->x0_chart());
    note = std::to_string(segs.size()) + " chart segments";
    return (composite - hol.acting).norm();
  });
  r.run("round-trip", tol.cocycle, [&](auto& rng, std::string& note) {
    ReconstructionOptions options;
    options.steps = steps;
    options.samples_per_overlap = 8;
    options.tolerance = tol.cocycle;
    options.seed = rng();
    const AssociatedRoundTrip trip = associated_round_trip(conn, r.sc().x0, options);
    std::vector<std::pair<std::string, Curve>> curves;
    for (const auto& entry : r.sc().curves) {
      if (curves.size() < 2) curves.push_back(entry);
    }
    if (curves.empty()) curves.emplace_back("random-0", r.random_curve(rng, 0.5));
    return over_curves(r, curves, note, [&](const Curve& c) {
      return trip.compare(conn, c, c.t1(), sys.fiber().sample(rng), 100);
    });
  });
}

}  // namespace

bool Report::all_pass() const { return count(CheckStatus::Fail) == 0; }

int Report::count(CheckStatus status) const {
  int n = 0;
  for (const CheckEntry& e : entries) n += e.status == status;
  return n;
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"system", "transport", "curvature", "holonomy", "universal", "reconstruction"};
  return names;
}

Report run_check_suite(const Scenario& scenario, const std::vector<std::string>& suites, const CheckOptions& options) {
  static const std::map<std::string, void (*)(Runner&)> table{
      {"system", system_suite},     {"transport", transport_suite}, {"curvature", curvature_suite},
      {"holonomy", holonomy_suite}, {"universal", universal_suite}, {"reconstruction", reconstruction_suite}};
  for (const std::string& s : suites) {
    if (!table.count(s)) throw DomainError("unknown suite '" + s + "'");
  }
  Report report;
  report.scenario = scenario.name;
  report.options = options;
  Runner runner(scenario, options, report);
  for (const std::string& name : suite_names()) {
    if (!suites.empty() && std::find(suites.begin(), suites.end(), name) == suites.end()) continue;
    report.suites.push_back(name);
    runner.set_suite(name);
    table.at(name)(runner);
  }
  return report;
}

std::string status_name(CheckStatus status) {
  switch (status) {
    case CheckStatus::Pass:
      return "PASS";
    case CheckStatus::Fail:
      return "FAIL";
    case CheckStatus::Skip:
      return "SKIP";
  }
  return "?";
}

std::string report_json(const Report& report, bool timing) {
  nlohmann::ordered_json out;
  out["scenario"] = report.scenario;
  out["seed"] = report.options.seed;
  out["steps"] = report.options.steps;
  out["tol_scale"] = report.options.tol_scale;
  out["suites"] = report.suites;
  nlohmann::ordered_json checks = nlohmann::ordered_json::array();
  for (const CheckEntry& e : report.entries) {
    nlohmann::ordered_json j;
    j["suite"] = e.suite;
    j["name"] = e.name;
    j["status"] = status_name(e.status);
    j["residual"] = e.residual;
    j["tolerance"] = e.tolerance;
    if (timing) j["runtime_ms"] = e.runtime_ms;
    if (!e.note.empty()) j["note"] = e.note;
    checks.push_back(std::move(j));
  }
  out["checks"] = std::move(checks);
  out["summary"] = {{"pass", report.count(CheckStatus::Pass)},
                    {"fail", report.count(CheckStatus::Fail)},
                    {"skip", report.count(CheckStatus::Skip)}};
  return out.dump(2) + "\n";
}

std::string report_csv(const Report& report, bool timing) {
  std::ostringstream out;
  out.precision(17);
  out << "suite,name,status,residual,tolerance" << (timing ? ",runtime_ms" : "") << ",note\n";
  for (const CheckEntry& e : report.entries) {
    std::string note = e.note;
    for (char& c : note) {
      if (c == '"') c = '\'';
    }
    out << e.suite << ',' << e.name << ',' << status_name(e.status) << ',' << e.residual << ',' << e.tolerance;
    if (timing) out << ',' << e.runtime_ms;
    out << ",\"" << note << "\"\n";
  }
  return out.str();
}

}  // namespace fibersys
