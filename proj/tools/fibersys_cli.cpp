// fibersys: scenario checks, transports, curvature, holonomy and bundle
// reconstruction from the command line.
//
// Exit codes: 0 everything passed, 1 a check failed, 2 the scenario or the
// command line could not be used.

#include "fibersys/checks.hpp"
#include "fibersys/reconstruction.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <fstream>
#include <iostream>
#include <limits>

using namespace fibersys;
using json = nlohmann::ordered_json;

namespace {

struct Common {
  std::string scenario;
  int steps = 400;
  std::uint64_t seed = 0;
  double tol_scale = 1.0;
  std::string output = "json";
  std::string trace;
  bool timing = false;
};

// Bad flags or names; reported with exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--scenario", c.scenario, "builtin name or path to a scenario JSON file")->required();
  cmd->add_option("--steps", c.steps, "RK4 steps per transport")->envname("FIBERSYS_STEPS")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", c.seed, "seed for every sampled check");
  cmd->add_option("--tol-scale", c.tol_scale, "multiply every tolerance")->check(CLI::PositiveNumber);
  cmd->add_option("--output", c.output, "report format")->check(CLI::IsMember({"json", "csv"}));
  cmd->add_option("--trace", c.trace, "write the transport path as CSV");
  cmd->add_flag("--timing", c.timing, "include runtimes in reports");
}

Vec to_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }
std::vector<double> to_list(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json rows(const Mat& m) {
  json out = json::array();
  for (int i = 0; i < m.rows(); ++i) out.push_back(to_list(m.row(i).transpose()));
  return out;
}

void flatten(const json& j, const std::string& prefix, std::ostream& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "." + std::to_string(i), out);
  } else {
    out << prefix << ',' << (j.is_string() ? j.get<std::string>() : j.dump()) << '\n';
  }
}

void emit(const json& j, const Common& c) {
  if (c.output == "csv") {
    std::cout << "key,value\n";
    flatten(j, "", std::cout);
  } else {
    std::cout << j.dump(2) << '\n';
  }
}

Vec sized(const std::vector<double>& v, int n, const char* flag) {
  if (static_cast<int>(v.size()) != n) {
    throw UsageError(std::string(flag) + " needs " + std::to_string(n) + " values");
  }
  return to_vec(v);
}

const Curve& pick_curve(const Scenario& sc, const std::string& name) {
  auto it = sc.curves.find(name);
  if (it == sc.curves.end()) throw UsageError("scenario '" + sc.name + "' has no curve '" + name + "'");
  return it->second;
}

Vec default_u0(const Scenario& sc, const std::string& curve, std::uint64_t seed) {
  if (sc.expect.escape && sc.expect.escape->curve == curve) return sc.expect.escape->u0;
  if (sc.expect.holonomy && sc.expect.holonomy->curve == curve) return sc.expect.holonomy->u0;
  std::mt19937_64 rng(seed);
  return sc.conn.system().fiber().sample(rng);
}

int run_check(const Scenario& sc, const Common& c, const std::vector<std::string>& suites) {
  const Report report = run_check_suite(sc, suites, {c.seed, c.steps, c.tol_scale});
  std::cout << (c.output == "csv" ? report_csv(report, c.timing) : report_json(report, c.timing));
  return report.all_pass() ? 0 : 1;
}

int run_transport(const Scenario& sc, const Common& c, std::string curve_name, const std::vector<double>& u0_in,
                  const std::string& route, std::optional<double> time) {
  if (curve_name.empty()) {
    if (sc.curves.empty()) throw UsageError("scenario has no curves");
    curve_name = sc.curves.begin()->first;
  }
  const Curve& curve = pick_curve(sc, curve_name);
  const double t = time.value_or(curve.t1());
  const Vec u0 = u0_in.empty() ? default_u0(sc, curve_name, c.seed) : sized(u0_in, sc.conn.system().fiber_dim(), "--u0");
  json out;
  out["scenario"] = sc.name;
  out["curve"] = curve_name;
  out["route"] = route;
  out["t"] = t;
  out["u0"] = to_list(u0);
  TransportOptions options;
  options.record = !c.trace.empty();
  try {
    const TransportResult r = route == "group" ? transport_group(sc.conn, curve, t, u0, c.steps, options)
                                               : transport_direct(sc.conn, curve, t, u0, c.steps, options);
    out["escaped"] = false;
    out["end"] = to_list(r.end);
    out["end_chart"] = r.end_chart;
    out["error_estimate"] = r.error_estimate;
    if (r.acting) out["acting"] = rows(*r.acting);
    json segs = json::array();
    for (const TransportSegment& s : r.segments) {
      segs.push_back({{"chart", s.chart}, {"t0", s.t0}, {"t1", s.t1}, {"steps", s.steps}});
    }
    out["segments"] = segs;
    if (!c.trace.empty()) {
      std::ofstream f(c.trace);
      if (!f) throw UsageError("cannot write trace to " + c.trace);
      write_trace_csv(f, curve, r);
    }
    emit(out, c);
    return 0;
  } catch (const EscapeDetected& e) {
    out["escaped"] = true;
    out["escape_time"] = e.time();
    out["last_state"] = to_list(e.last_state());
    out["escape_expected"] = !sc.expect.complete;
    emit(out, c);
    return sc.expect.complete ? 1 : 0;
  }
}

int run_curvature(const Scenario& sc, const Common& c, const std::vector<double>& x_in, const std::vector<double>& x1_in,
                  const std::vector<double>& x2_in, const std::vector<double>& e_in) {
  const SystemSpec& sys = sc.conn.system();
  const int m = sys.base_dim();
  if (m < 2 && x1_in.empty() && x2_in.empty()) throw UsageError("curvature needs two tangent directions; the base is one-dimensional");
  const Vec x = x_in.empty() ? sc.x0 : sized(x_in, m, "--x");
  const Vec x1 = x1_in.empty() ? Vec(Vec::Unit(m, 0)) : sized(x1_in, m, "--x1");
  const Vec x2 = x2_in.empty() ? Vec(Vec::Unit(m, std::min(1, m - 1))) : sized(x2_in, m, "--x2");
  std::mt19937_64 rng(c.seed);
  const Vec e = e_in.empty() ? sys.fiber().sample(rng) : sized(e_in, sys.fiber_dim(), "--e");
  const int chart = sys.base().best_chart(x);
  const Vec xc = *sys.base().to_chart(chart, x);
  const CurvatureValue f = curvature_formula(sc.conn, chart, xc, x1, x2);
  const Vec field = f.as_field(e);
  const Vec bracket = curvature_bracket(sc.conn, chart, xc, x1, x2, e);
  const double residual = (bracket - field).norm();
  const double tol = sc.tol.scaled(c.tol_scale).curvature;
  json out;
  out["scenario"] = sc.name;
  out["chart"] = chart;
  out["x"] = to_list(xc);
  out["x1"] = to_list(x1);
  out["x2"] = to_list(x2);
  out["curvature"] = to_list(f.v);
  out["e"] = to_list(e);
  out["field_at_e"] = to_list(field);
  out["bracket_at_e"] = to_list(bracket);
  out["residual"] = residual;
  out["tolerance"] = tol;
  out["status"] = residual <= tol ? "PASS" : "FAIL";
  emit(out, c);
  return residual <= tol ? 0 : 1;
}

int run_holonomy(const Scenario& sc, const Common& c, std::string curve_name, const std::vector<double>& u0_in) {
  if (curve_name.empty()) {
    if (!sc.expect.holonomy) throw UsageError("no --curve given and the scenario declares no holonomy curve");
    curve_name = sc.expect.holonomy->curve;
  }
  const Curve& curve = pick_curve(sc, curve_name);
  const Vec u0 = u0_in.empty() ? default_u0(sc, curve_name, c.seed) : sized(u0_in, sc.conn.system().fiber_dim(), "--u0");
  const HolonomyResult hol = holonomy_loop(sc.conn, curve, u0, c.steps);
  json out;
  out["scenario"] = sc.name;
  out["curve"] = curve_name;
  out["u0"] = to_list(u0);
  out["end"] = to_list(hol.transport.end);
  out["acting"] = rows(hol.acting);
  int code = 0;
  try {
    const Vec log = holonomy_log(sc.conn, hol.transport.end_chart, hol.acting);
    out["log"] = to_list(log);
    if (sc.expect.holonomy && sc.expect.holonomy->curve == curve_name) {
      const double residual = (log - sc.expect.holonomy->log).norm();
      const double tol = sc.tol.scaled(c.tol_scale).holonomy_angle;
      out["expected_log"] = to_list(sc.expect.holonomy->log);
      out["residual"] = residual;
      out["tolerance"] = tol;
      out["status"] = residual <= tol ? "PASS" : "FAIL";
      code = residual <= tol ? 0 : 1;
    }
  } catch (const LogBranchError& e) {
    out["log"] = nullptr;
    out["note"] = e.what();
  }
  emit(out, c);
  return code;
}

int run_reconstruct(const Scenario& sc, const Common& c, int samples) {
  const RadialAtlas ratlas(sc.conn.system().base(), sc.x0);
  ReconstructionOptions options;
  options.steps = c.steps;
  options.samples_per_overlap = samples;
  options.seed = c.seed;
  options.tolerance = std::numeric_limits<double>::infinity();
  const Cocycle cocycle = build_cocycle(sc.conn, ratlas, options);
  const double tol = sc.tol.scaled(c.tol_scale).cocycle;
  const bool ok = cocycle.worst() <= tol && cocycle.atlas_residual <= tol;
  json out;
  out["scenario"] = sc.name;
  out["tolerance"] = tol;
  out["status"] = ok ? "PASS" : "FAIL";
  out["report"] = reconstruction_report(sc.conn, ratlas, cocycle);
  emit(out, c);
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Systems of vector fields on fiber bundles: transport, curvature, holonomy, reconstruction"};
  app.require_subcommand(1);
  Common common;

  std::vector<std::string> suites;
  auto* check = app.add_subcommand("check", "run invariant suites and print a report");
  add_common(check, common);
  check->add_option("--suite", suites, "suites to run (default: all)")->check(CLI::IsMember(suite_names()));

  std::string curve;
  std::vector<double> u0;
  std::string route = "direct";
  std::optional<double> time;
  auto* transport = app.add_subcommand("transport", "parallel transport along a scenario curve");
  add_common(transport, common);
  transport->add_option("--curve", curve, "scenario curve (default: first by name)");
  transport->add_option("--u0", u0, "start fiber point");
  transport->add_option("--route", route, "direct fiber ODE or group ODE")->check(CLI::IsMember({"direct", "group"}));
  transport->add_option("--time", time, "end parameter (default: end of the curve)");

  std::vector<double> x, x1, x2, e;
  auto* curvature = app.add_subcommand("curvature", "curvature formula against the bracket of horizontal lifts");
  add_common(curvature, common);
  curvature->add_option("--x", x, "base point (default: x0)");
  curvature->add_option("--x1", x1, "first tangent (default: e0)");
  curvature->add_option("--x2", x2, "second tangent (default: e1)");
  curvature->add_option("--e", e, "fiber point (default: sampled)");

  auto* holonomy = app.add_subcommand("holonomy", "transport around a closed scenario curve");
  add_common(holonomy, common);
  holonomy->add_option("--curve", curve, "closed curve (default: the expected-holonomy curve)");
  holonomy->add_option("--u0", u0, "start fiber point");

  int samples = 16;
  auto* reconstruct = app.add_subcommand("reconstruct", "rebuild the atlas and cocycle from transport");
  add_common(reconstruct, common);
  reconstruct->add_option("--samples", samples, "samples per overlap")->check(CLI::PositiveNumber);

  auto* universal = app.add_subcommand("universal-check", "checks of the universal connection");
  add_common(universal, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    return app.exit(err) == 0 ? 0 : 2;
  }

  std::optional<Scenario> sc;
  try {
    sc.emplace(load_scenario(common.scenario));
  } catch (const Error& err) {
    std::cerr << "fibersys: " << err.what() << '\n';
    return 2;
  }

  try {
    if (check->parsed()) return run_check(*sc, common, suites);
    if (transport->parsed()) return run_transport(*sc, common, curve, u0, route, time);
    if (curvature->parsed()) return run_curvature(*sc, common, x, x1, x2, e);
    if (holonomy->parsed()) return run_holonomy(*sc, common, curve, u0);
    if (reconstruct->parsed()) return run_reconstruct(*sc, common, samples);
    if (universal->parsed()) return run_check(*sc, common, {"universal"});
  } catch (const UsageError& err) {
    std::cerr << "fibersys: " << err.what() << '\n';
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "fibersys: " << err.what() << '\n';
    return 1;
  }
  return 2;
}
