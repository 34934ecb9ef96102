#include "fibersys/scenario.hpp"

#include "json.hpp"

#include <fstream>
#include <sstream>

namespace fibersys {

using json = nlohmann::json;

Tolerances Tolerances::scaled(double f) const {
  Tolerances t = *this;
  for (double* v : {&t.transport_agreement, &t.curvature, &t.ad_pullback, &t.membership, &t.claim2,
                    &t.universal_transport, &t.relatedness, &t.cocycle, &t.escape_time, &t.small_loop,
                    &t.holonomy_angle, &t.via_universal, &t.projection, &t.transition, &t.homomorphism, &t.jacobi}) {
    *v *= f;
  }
  return t;
}

const Curve& Scenario::curve(const std::string& key) const {
  auto it = curves.find(key);
  if (it == curves.end()) throw DomainError("scenario " + name + " has no curve '" + key + "'");
  return it->second;
}

// ---------------------------------------------------------------------------
// Builtins

namespace {

const std::map<std::string, std::string>& builtins() {
  static const std::map<std::string, std::string> table = {
      {"trivial", R"({
  "schema": "fibersys/1",
  "name": "trivial",
  "description": "product bundle R2 x R2 with the rotation action and the zero splitting",
  "base": {"charts": [{"lo": [-100, -100], "hi": [100, 100]}]},
  "fiber": {"kind": "euclidean", "dim": 2},
  "action": {"group": "rotation", "fields": [{"A": [[0, -1], [1, 0]]}]},
  "curves": {
    "unit-square": {"type": "polyline", "points": [[0, 0], [1, 0], [1, 1], [0, 1], [0, 0]]},
    "diagonal": {"type": "segment", "from": [0, 0], "to": [2, 1]}
  },
  "expect": {"holonomy": {"curve": "unit-square", "u0": [1, 0], "log": [0.0]}}
})"},
      {"abelian-area", R"({
  "schema": "fibersys/1",
  "name": "abelian-area",
  "description": "rotation action on R2 over R2 with sigma = x dy e1; holonomy measures enclosed area",
  "base": {"charts": [{"lo": [-100, -100], "hi": [100, 100]}]},
  "fiber": {"kind": "euclidean", "dim": 2},
  "action": {"group": "rotation", "fields": [{"A": [[0, -1], [1, 0]]}]},
  "splitting": [
    [],
    [{"powers": [1, 0], "coeff": [1.0]}]
  ],
  "curves": {
    "unit-square": {"type": "polyline", "points": [[0, 0], [1, 0], [1, 1], [0, 1], [0, 0]]},
    "half-disc": {"type": "arc", "center": [0, 0], "radius": 1.0, "a0": 0.0, "a1": 3.141592653589793}
  },
  "expect": {"holonomy": {"curve": "unit-square", "u0": [1, 0], "log": [1.0]}}
})"},
      {"so3-sphere", R"({
  "schema": "fibersys/1",
  "name": "so3-sphere",
  "description": "rotations of the unit sphere over R2 with a non-flat polynomial splitting",
  "base": {"charts": [{"lo": [-100, -100], "hi": [100, 100]}]},
  "fiber": {"kind": "sphere"},
  "algebra": {"name": "so3"},
  "action": {"group": "rotation", "fields": [
    {"A": [[0, 0, 0], [0, 0, 1], [0, -1, 0]]},
    {"A": [[0, 0, -1], [0, 0, 0], [1, 0, 0]]},
    {"A": [[0, 1, 0], [-1, 0, 0], [0, 0, 0]]}
  ]},
  "splitting": [
    [{"powers": [0, 0], "coeff": [0.3, 0.0, -0.25]},
     {"powers": [0, 1], "coeff": [0.2, 0.0, 0.0]},
     {"powers": [1, 0], "coeff": [0.0, 0.1, 0.0]},
     {"powers": [1, 1], "coeff": [0.0, 0.0, 0.15]}],
    [{"powers": [1, 0], "coeff": [0.2, 0.0, 0.0]},
     {"powers": [0, 0], "coeff": [0.0, -0.4, 0.0]},
     {"powers": [0, 2], "coeff": [0.0, 0.1, 0.0]},
     {"powers": [0, 1], "coeff": [0.0, 0.0, 0.3]}]
  ],
  "curves": {
    "unit-square": {"type": "polyline", "points": [[0, 0], [1, 0], [1, 1], [0, 1], [0, 0]]},
    "arc": {"type": "arc", "center": [0, 0], "radius": 0.8, "a0": 0.0, "a1": 2.5},
    "cubic": {"type": "polynomial", "coeffs": [[0, 0], [0.5, -0.3], [0.2, 0.4], [-0.1, 0.2]]}
  }
})"},
      {"incomplete-interval", R"({
  "schema": "fibersys/1",
  "name": "incomplete-interval",
  "description": "translations of R restricted to the open interval (0, 1): an incomplete system",
  "base": {"charts": [{"lo": [-1000], "hi": [1000]}]},
  "fiber": {"kind": "euclidean", "dim": 1, "restriction": {"box": {"lo": [0], "hi": [1]}}},
  "algebra": {"name": "abelian", "dim": 1},
  "action": {"group": "affine", "fields": [{"A": [[0]], "b": [1]}]},
  "splitting": [[{"powers": [0], "coeff": [1.0]}]],
  "curves": {"segment": {"type": "segment", "from": [0], "to": [1]}},
  "expect": {"complete": false, "parent": "translation-line",
             "escape": {"curve": "segment", "u0": [0.5], "time": 0.5}}
})"},
      {"translation-line", R"({
  "schema": "fibersys/1",
  "name": "translation-line",
  "description": "translations of the whole line: the complete parent of incomplete-interval",
  "base": {"charts": [{"lo": [-1000], "hi": [1000]}]},
  "fiber": {"kind": "euclidean", "dim": 1},
  "algebra": {"name": "abelian", "dim": 1},
  "action": {"group": "affine", "fields": [{"A": [[0]], "b": [1]}]},
  "splitting": [[{"powers": [0], "coeff": [1.0]}]],
  "curves": {
    "segment": {"type": "segment", "from": [0], "to": [1]},
    "long": {"type": "segment", "from": [0], "to": [100]}
  }
})"},
      {"circle-base-winding", R"({
  "schema": "fibersys/1",
  "name": "circle-base-winding",
  "description": "R2 bundle over the circle glued by a rotation of 1 rad; sigma = 0.1 dtheta e1",
  "base": {
    "charts": [{"lo": [-0.5], "hi": [3.641592653589793]}, {"lo": [2.641592653589793], "hi": [6.783185307179586]}],
    "period": [6.283185307179586]
  },
  "fiber": {"kind": "euclidean", "dim": 2},
  "action": {"group": "rotation", "fields": [{"A": [[0, -1], [1, 0]]}]},
  "transitions": [{"to": 1, "from": 0, "pieces": [
    {"lo": [-1.0], "hi": [1.0], "coefficients": [1.0]},
    {"lo": [2.141592653589793], "hi": [4.141592653589793], "coefficients": [0.0]}
  ]}],
  "splitting": [[{"powers": [0], "coeff": [0.1]}]],
  "x0": [0.0],
  "curves": {
    "circle": {"type": "polyline", "points": [[0.0], [6.283185307179586]]},
    "half": {"type": "segment", "from": [0.0], "to": [3.141592653589793]}
  },
  "expect": {"holonomy": {"curve": "circle", "u0": [1, 0], "log": [-0.3716814692820414]}}
})"},
  };
  return table;
}

// ---------------------------------------------------------------------------
// JSON helpers. Structural problems are ParseErrors carrying the JSON path.

struct Reader {
  std::string origin;

  [[noreturn]] void fail(const std::string& where, const std::string& what) const {
    throw ParseError(origin + ": " + where + ": " + what);
  }

  const json& at(const json& j, const std::string& key, const std::string& where) const {
    if (!j.is_object()) fail(where, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) fail(where, "missing key '" + key + "'");
    return *it;
  }

  double number(const json& j, const std::string& where) const {
    if (!j.is_number()) fail(where, "expected a number");
    return j.get<double>();
  }

  int integer(const json& j, const std::string& where) const {
    if (!j.is_number_integer()) fail(where, "expected an integer");
    return j.get<int>();
  }

  std::string string(const json& j, const std::string& where) const {
    if (!j.is_string()) fail(where, "expected a string");
    return j.get<std::string>();
  }

  Vec vec(const json& j, const std::string& where) const {
    if (!j.is_array()) fail(where, "expected an array of numbers");
    Vec v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number(j[i], where + "/" + std::to_string(i));
    return v;
  }

  Mat mat(const json& j, const std::string& where) const {
    if (!j.is_array() || j.empty()) fail(where, "expected a non-empty array of rows");
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    Mat m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < j.size(); ++r) {
      const Vec row = vec(j[r], where + "/" + std::to_string(r));
      if (static_cast<std::size_t>(row.size()) != cols) fail(where, "ragged matrix");
      m.row(static_cast<Eigen::Index>(r)) = row.transpose();
    }
    return m;
  }
};

BaseAtlas read_base(const Reader& rd, const json& j) {
  const json& charts = rd.at(j, "charts", "/base");
  if (!charts.is_array() || charts.empty()) rd.fail("/base/charts", "expected a non-empty array");
  std::vector<Box> boxes;
  for (std::size_t i = 0; i < charts.size(); ++i) {
    const std::string w = "/base/charts/" + std::to_string(i);
    Box b{rd.vec(rd.at(charts[i], "lo", w), w + "/lo"), rd.vec(rd.at(charts[i], "hi", w), w + "/hi")};
    if (b.lo.size() != b.hi.size()) throw ValidationError("dimensions", w + ": lo and hi differ in length");
    boxes.push_back(b);
  }
  Vec period;
  if (j.contains("period")) period = rd.vec(j["period"], "/base/period");
  try {
    return BaseAtlas(std::move(boxes), period);
  } catch (const Error& e) {
    throw ValidationError("base-atlas", e.what());
  }
}

FiberModel read_fiber(const Reader& rd, const json& j) {
  const std::string kind = rd.string(rd.at(j, "kind", "/fiber"), "/fiber/kind");
  FiberModel fiber = FiberModel::euclidean(1);
  if (kind == "euclidean") {
    fiber = FiberModel::euclidean(rd.integer(rd.at(j, "dim", "/fiber"), "/fiber/dim"));
  } else if (kind == "torus") {
    fiber = FiberModel::torus(rd.vec(rd.at(j, "period", "/fiber"), "/fiber/period"));
  } else if (kind == "sphere") {
    fiber = FiberModel::sphere();
  } else {
    rd.fail("/fiber/kind", "unknown fiber kind '" + kind + "'");
  }
  if (j.contains("restriction")) {
    const json& r = j["restriction"];
    if (r.contains("box")) {
      fiber = fiber.restricted_to_box(rd.vec(rd.at(r["box"], "lo", "/fiber/restriction/box"), "/fiber/restriction/box/lo"),
                                      rd.vec(rd.at(r["box"], "hi", "/fiber/restriction/box"), "/fiber/restriction/box/hi"));
    } else if (r.contains("ball")) {
      const json& b = r["ball"];
      fiber = fiber.restricted_to_ball(rd.vec(rd.at(b, "center", "/fiber/restriction/ball"), "/fiber/restriction/ball/center"),
                                       rd.number(rd.at(b, "radius", "/fiber/restriction/ball"), "/fiber/restriction/ball/radius"));
    } else {
      rd.fail("/fiber/restriction", "expected 'box' or 'ball'");
    }
  }
  return fiber;
}

GroupKind read_group(const Reader& rd, const json& j, const std::string& where) {
  const std::string g = rd.string(j, where);
  if (g == "rotation") return GroupKind::Rotation;
  if (g == "affine") return GroupKind::Affine;
  if (g == "general") return GroupKind::General;
  rd.fail(where, "unknown group kind '" + g + "'");
}

Representation read_fields(const Reader& rd, const json& fields, GroupKind kind, const std::string& where) {
  if (!fields.is_array() || fields.empty()) rd.fail(where, "expected a non-empty array of fields");
  std::vector<Mat> a;
  std::vector<Vec> b;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const std::string w = where + "/" + std::to_string(i);
    a.push_back(rd.mat(rd.at(fields[i], "A", w), w + "/A"));
    b.push_back(fields[i].contains("b") ? rd.vec(fields[i]["b"], w + "/b") : Vec::Zero(a.back().rows()));
  }
  try {
    return Representation(std::move(a), std::move(b), kind);
  } catch (const DimensionMismatch& e) {
    throw ValidationError("dimensions", where + ": " + e.what());
  }
}

std::optional<LieAlgebra> read_algebra(const Reader& rd, const json& root) {
  if (!root.contains("algebra")) return std::nullopt;
  const json& j = root["algebra"];
  if (j.contains("name")) {
    const std::string name = rd.string(j["name"], "/algebra/name");
    if (name == "so3") return LieAlgebra::so3();
    if (name == "abelian") return LieAlgebra::abelian(rd.integer(rd.at(j, "dim", "/algebra"), "/algebra/dim"));
    rd.fail("/algebra/name", "unknown algebra '" + name + "'");
  }
  const int dim = rd.integer(rd.at(j, "dim", "/algebra"), "/algebra/dim");
  const Vec c = rd.vec(rd.at(j, "structure", "/algebra"), "/algebra/structure");
  if (c.size() != dim * dim * dim) throw ValidationError("dimensions", "structure constants need dim^3 entries");
  return LieAlgebra(dim, std::vector<double>(c.data(), c.data() + c.size()));
}

struct TransitionPiece {
  Box region;
  Mat acting;
};

std::vector<BundleTransition> read_transitions(const Reader& rd, const json& root, const BaseAtlas& base,
                                               const std::vector<Representation>& eta) {
  std::vector<BundleTransition> out;
  if (!root.contains("transitions")) return out;
  const json& list = root["transitions"];
  if (!list.is_array()) rd.fail("/transitions", "expected an array");
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string w = "/transitions/" + std::to_string(i);
    const int to = rd.integer(rd.at(list[i], "to", w), w + "/to");
    const int from = rd.integer(rd.at(list[i], "from", w), w + "/from");
    if (to < 0 || from < 0 || to >= base.chart_count() || from >= base.chart_count()) {
      throw ValidationError("transitions", w + ": unknown chart");
    }
    const Representation& rep = eta.size() == 1 ? eta.front() : eta[from];
    const json& pieces = rd.at(list[i], "pieces", w);
    if (!pieces.is_array() || pieces.empty()) rd.fail(w + "/pieces", "expected a non-empty array");
    std::vector<TransitionPiece> parsed;
    for (std::size_t p = 0; p < pieces.size(); ++p) {
      const std::string pw = w + "/pieces/" + std::to_string(p);
      TransitionPiece piece{Box{rd.vec(rd.at(pieces[p], "lo", pw), pw + "/lo"), rd.vec(rd.at(pieces[p], "hi", pw), pw + "/hi")},
                            Mat()};
      if (piece.region.dim() != base.dim() || piece.region.hi.size() != base.dim()) {
        throw ValidationError("dimensions", pw + ": region dimension");
      }
      if (pieces[p].contains("acting")) {
        piece.acting = rd.mat(pieces[p]["acting"], pw + "/acting");
        if (piece.acting.rows() != rep.matrix_size() || piece.acting.cols() != rep.matrix_size()) {
          throw ValidationError("dimensions", pw + ": acting matrix size");
        }
      } else {
        const Vec c = rd.vec(rd.at(pieces[p], "coefficients", pw), pw + "/coefficients");
        if (c.size() != rep.algebra_dim()) throw ValidationError("dimensions", pw + ": coefficient count");
        piece.acting = matrix_exp(rep.augmented_field(c));
      }
      parsed.push_back(std::move(piece));
    }
    out.push_back({to, from, [parsed, to, from](const Vec& x) -> Mat {
                     for (const TransitionPiece& p : parsed) {
                       if (p.region.contains(x)) return p.acting;
                     }
                     throw ChartMismatch("transition " + std::to_string(to) + "<-" + std::to_string(from) +
                                         " evaluated outside its pieces");
                   }});
  }
  return out;
}

std::vector<PolyMap> read_components(const Reader& rd, const json& j, int m, int d, const std::string& where) {
  if (!j.is_array() || static_cast<int>(j.size()) != m) rd.fail(where, "expected one component per base direction");
  std::vector<PolyMap> comps;
  for (int c = 0; c < m; ++c) {
    const std::string cw = where + "/" + std::to_string(c);
    PolyMap p(m, d);
    const json& terms = j[static_cast<std::size_t>(c)];
    if (!terms.is_array()) rd.fail(cw, "expected an array of terms");
    for (std::size_t t = 0; t < terms.size(); ++t) {
      const std::string tw = cw + "/" + std::to_string(t);
      const Vec powers = rd.vec(rd.at(terms[t], "powers", tw), tw + "/powers");
      const Vec coeff = rd.vec(rd.at(terms[t], "coeff", tw), tw + "/coeff");
      if (powers.size() != m || coeff.size() != d) throw ValidationError("dimensions", tw + ": term shape");
      std::vector<int> pw(m);
      for (int i = 0; i < m; ++i) {
        pw[i] = static_cast<int>(powers(i));
        if (pw[i] < 0 || pw[i] != powers(i)) throw ValidationError("dimensions", tw + ": powers must be natural");
      }
      p.add_term(pw, coeff);
    }
    comps.push_back(std::move(p));
  }
  return comps;
}

Splitting read_splitting(const Reader& rd, const json& root, int m, int d, int charts) {
  if (!root.contains("splitting")) return Splitting::zero(m, d);
  const json& j = root["splitting"];
  if (j.is_object()) {
    const json& list = rd.at(j, "charts", "/splitting");
    if (!list.is_array() || static_cast<int>(list.size()) != charts) {
      throw ValidationError("dimensions", "/splitting/charts: one entry per base chart");
    }
    std::vector<std::vector<PolyMap>> per;
    for (std::size_t i = 0; i < list.size(); ++i) {
      per.push_back(read_components(rd, list[i], m, d, "/splitting/charts/" + std::to_string(i)));
    }
    return Splitting::polynomial(std::move(per));
  }
  return Splitting::polynomial({read_components(rd, j, m, d, "/splitting")});
}

Curve read_curve(const Reader& rd, const json& j, const std::string& where) {
  const std::string type = rd.string(rd.at(j, "type", where), where + "/type");
  if (type == "polyline") {
    const json& pts = rd.at(j, "points", where);
    if (!pts.is_array() || pts.size() < 2) rd.fail(where + "/points", "need at least two points");
    std::vector<Vec> points;
    for (std::size_t i = 0; i < pts.size(); ++i) points.push_back(rd.vec(pts[i], where + "/points/" + std::to_string(i)));
    return Curve::polyline(points);
  }
  if (type == "segment") {
    return Curve::segment(rd.vec(rd.at(j, "from", where), where + "/from"), rd.vec(rd.at(j, "to", where), where + "/to"));
  }
  if (type == "polynomial") {
    const json& cs = rd.at(j, "coeffs", where);
    if (!cs.is_array() || cs.empty()) rd.fail(where + "/coeffs", "expected a non-empty array");
    std::vector<Vec> coeffs;
    for (std::size_t i = 0; i < cs.size(); ++i) coeffs.push_back(rd.vec(cs[i], where + "/coeffs/" + std::to_string(i)));
    const double t0 = j.contains("t0") ? rd.number(j["t0"], where + "/t0") : 0.0;
    const double t1 = j.contains("t1") ? rd.number(j["t1"], where + "/t1") : 1.0;
    return Curve::polynomial(coeffs, t0, t1);
  }
  if (type == "arc") {
    return Curve::arc(rd.vec(rd.at(j, "center", where), where + "/center"),
                      rd.number(rd.at(j, "radius", where), where + "/radius"),
                      rd.number(rd.at(j, "a0", where), where + "/a0"), rd.number(rd.at(j, "a1", where), where + "/a1"));
  }
  if (type == "radial") {
    return Curve::radial(rd.vec(rd.at(j, "center", where), where + "/center"), rd.vec(rd.at(j, "x", where), where + "/x"));
  }
  rd.fail(where + "/type", "unknown curve type '" + type + "'");
}

void read_tolerances(const Reader& rd, const json& root, Tolerances& tol) {
  if (!root.contains("tolerances")) return;
  const json& j = root["tolerances"];
  if (!j.is_object()) rd.fail("/tolerances", "expected an object");
  const std::map<std::string, double*> keys = {
      {"transport_agreement", &tol.transport_agreement}, {"curvature", &tol.curvature},
      {"ad_pullback", &tol.ad_pullback},                 {"membership", &tol.membership},
      {"claim2", &tol.claim2},                           {"universal_transport", &tol.universal_transport},
      {"relatedness", &tol.relatedness},                 {"cocycle", &tol.cocycle},
      {"escape_time", &tol.escape_time},                 {"small_loop", &tol.small_loop},
      {"holonomy_angle", &tol.holonomy_angle},           {"via_universal", &tol.via_universal},
      {"projection", &tol.projection},                   {"transition", &tol.transition},
      {"homomorphism", &tol.homomorphism},               {"jacobi", &tol.jacobi}};
  for (auto it = j.begin(); it != j.end(); ++it) {
    auto k = keys.find(it.key());
    if (k == keys.end()) rd.fail("/tolerances/" + it.key(), "unknown tolerance");
    *k->second = rd.number(it.value(), "/tolerances/" + it.key());
  }
}

void validate(const Scenario& sc) {
  const SystemSpec& sys = sc.conn.system();
  const Tolerances& tol = sc.tol;
  const LieAlgebra& lie = sys.algebra();
  if (lie.antisymmetry_residual() > tol.jacobi) throw ValidationError("antisymmetry", "structure constants are not antisymmetric");
  if (lie.jacobi_residual() > tol.jacobi) throw ValidationError("jacobi", "structure constants violate the Jacobi identity");
  try {
    std::mt19937_64 rng(0);
    sys.fiber().sample(rng);
  } catch (const EmptyFiber& e) {
    throw ValidationError("fiber-nonempty", e.what());
  }
  const double hom = representation_residual(sys, 8, 0);
  if (hom > tol.homomorphism) {
    throw ValidationError("homomorphism", "fiber fields do not represent the algebra (residual " + std::to_string(hom) + ")");
  }
  if (!check_monic(sys, std::max(8, sys.algebra_dim()), 0).monic) {
    throw ValidationError("monic", "the action is not injective on V");
  }
  if (sys.base().cocycle_residual(8, 0) > 1e-9) throw ValidationError("base-cocycle", "chart changes do not compose");
  const double cocycle = bundle_cocycle_residual(sys, 16, 0);
  if (cocycle > tol.cocycle) {
    throw ValidationError("cocycle", "bundle transitions violate the cocycle condition (residual " + std::to_string(cocycle) + ")");
  }
  const double compat = transition_compatibility_residual(sys, 16, 0);
  if (compat > tol.transition) {
    throw ValidationError("transition-compatibility", "residual " + std::to_string(compat));
  }
  const double split = splitting_compatibility_residual(sc.conn, 16, 0);
  if (split > tol.transition) {
    throw ValidationError("splitting-compatibility", "residual " + std::to_string(split));
  }
  auto in_atlas = [&sys](const Vec& x) {
    for (int a = 0; a < sys.base().chart_count(); ++a) {
      if (sys.base().in_chart(a, x)) return true;
    }
    return false;
  };
  if (!in_atlas(sc.x0)) throw ValidationError("x0", "base point outside the atlas");
  for (const std::string* key : {sc.expect.escape ? &sc.expect.escape->curve : nullptr,
                                 sc.expect.holonomy ? &sc.expect.holonomy->curve : nullptr}) {
    if (key && !sc.curves.count(*key)) throw ValidationError("curves", "expectation names unknown curve '" + *key + "'");
  }
  for (const auto& [key, c] : sc.curves) {
    if (c.dim() != sys.base_dim()) throw ValidationError("dimensions", "curve '" + key + "' has the wrong dimension");
    for (int i = 0; i <= 64; ++i) {
      if (!in_atlas(c(c.t0() + (c.t1() - c.t0()) * i / 64.0))) {
        throw ValidationError("curves", "curve '" + key + "' leaves the base atlas");
      }
    }
  }
}

}  // namespace

std::vector<std::string> builtin_names() {
  return {"trivial", "abelian-area", "so3-sphere", "incomplete-interval", "translation-line", "circle-base-winding"};
}

bool is_builtin(const std::string& name) { return builtins().count(name) > 0; }

const std::string& builtin_source(const std::string& name) {
  auto it = builtins().find(name);
  if (it == builtins().end()) throw ParseError("unknown builtin scenario '" + name + "'");
  return it->second;
}

Scenario parse_scenario(const std::string& text, const std::string& origin) {
  const Reader rd{origin};
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
  }
  if (!root.is_object()) rd.fail("/", "expected an object");
  const std::string schema = rd.string(rd.at(root, "schema", ""), "/schema");
  if (schema != "fibersys/1") throw ValidationError("schema", "unsupported schema '" + schema + "'");

  BaseAtlas base = read_base(rd, rd.at(root, "base", ""));
  FiberModel fiber = read_fiber(rd, rd.at(root, "fiber", ""));
  const json& action = rd.at(root, "action", "");
  const GroupKind kind = read_group(rd, rd.at(action, "group", "/action"), "/action/group");
  std::vector<Representation> eta;
  if (action.contains("charts")) {
    const json& charts = action["charts"];
    if (!charts.is_array() || static_cast<int>(charts.size()) != base.chart_count()) {
      throw ValidationError("dimensions", "/action/charts: one entry per base chart");
    }
    for (std::size_t i = 0; i < charts.size(); ++i) {
      eta.push_back(read_fields(rd, charts[i], kind, "/action/charts/" + std::to_string(i)));
    }
  } else {
    eta.push_back(read_fields(rd, rd.at(action, "fields", "/action"), kind, "/action/fields"));
  }
  std::optional<LieAlgebra> algebra = read_algebra(rd, root);
  if (!algebra) {
    try {
      algebra = eta.front().algebra();
    } catch (const BasisProjectionError& e) {
      throw ValidationError("closure", std::string("fiber fields do not span a Lie algebra: ") + e.what());
    }
  }
  std::vector<BundleTransition> transitions = read_transitions(rd, root, base, eta);
  std::optional<SystemSpec> sys;
  try {
    sys.emplace(base, fiber, *algebra, eta, std::move(transitions));
  } catch (const ValidationError&) {
    throw;
  } catch (const Error& e) {
    throw ValidationError("dimensions", e.what());
  }
  Splitting sigma = read_splitting(rd, root, sys->base_dim(), sys->algebra_dim(), base.chart_count());

  Scenario sc{"", "", Connection(*sys, sigma), {}, {}, {}, base.center(0)};
  sc.name = root.contains("name") ? rd.string(root["name"], "/name") : origin;
  if (root.contains("description")) sc.description = rd.string(root["description"], "/description");
  if (root.contains("x0")) {
    sc.x0 = rd.vec(root["x0"], "/x0");
    if (sc.x0.size() != base.dim()) throw ValidationError("dimensions", "/x0 has the wrong dimension");
  }
  if (root.contains("curves")) {
    const json& curves = root["curves"];
    if (!curves.is_object()) rd.fail("/curves", "expected an object");
    for (auto it = curves.begin(); it != curves.end(); ++it) {
      sc.curves.emplace(it.key(), read_curve(rd, it.value(), "/curves/" + it.key()));
    }
  }
  if (root.contains("expect")) {
    const json& e = root["expect"];
    if (e.contains("complete")) {
      if (!e["complete"].is_boolean()) rd.fail("/expect/complete", "expected a boolean");
      sc.expect.complete = e["complete"].get<bool>();
    }
    if (e.contains("parent")) sc.expect.parent = rd.string(e["parent"], "/expect/parent");
    if (e.contains("escape")) {
      const json& x = e["escape"];
      sc.expect.escape = EscapeExpectation{rd.string(rd.at(x, "curve", "/expect/escape"), "/expect/escape/curve"),
                                           rd.vec(rd.at(x, "u0", "/expect/escape"), "/expect/escape/u0"),
                                           rd.number(rd.at(x, "time", "/expect/escape"), "/expect/escape/time")};
    }
    if (e.contains("holonomy")) {
      const json& x = e["holonomy"];
      sc.expect.holonomy = HolonomyExpectation{rd.string(rd.at(x, "curve", "/expect/holonomy"), "/expect/holonomy/curve"),
                                               rd.vec(rd.at(x, "u0", "/expect/holonomy"), "/expect/holonomy/u0"),
                                               rd.vec(rd.at(x, "log", "/expect/holonomy"), "/expect/holonomy/log")};
    }
  }
  read_tolerances(rd, root, sc.tol);
  try {
    validate(sc);
  } catch (const ValidationError&) {
    throw;
  } catch (const Error& e) {
    throw ValidationError("evaluation", e.what());
  }
  return sc;
}

Scenario load_scenario(const std::string& name_or_path) {
  if (is_builtin(name_or_path)) return parse_scenario(builtin_source(name_or_path), name_or_path);
  std::ifstream in(name_or_path);
  if (!in) throw ParseError("cannot open scenario file '" + name_or_path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), name_or_path);
}

}  // namespace fibersys
