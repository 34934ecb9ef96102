#include "fibersys/system.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fibersys {

bool Box::contains(const Vec& x) const {
  return x.size() == lo.size() && (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
}

double Box::margin(const Vec& x) const {
  if (x.size() != lo.size()) return -std::numeric_limits<double>::infinity();
  return std::min((x - lo).minCoeff(), (hi - x).minCoeff());
}

// ---------------------------------------------------------------------------
// BaseAtlas

BaseAtlas::BaseAtlas(std::vector<Box> charts, Vec period) : charts_(std::move(charts)), period_(std::move(period)) {
  if (charts_.empty()) throw DomainError("a base atlas needs at least one chart");
  dim_ = charts_.front().dim();
  for (const Box& b : charts_) {
    if (b.dim() != dim_ || b.hi.size() != dim_) throw DimensionMismatch("all chart boxes must share a dimension");
    if ((b.hi.array() <= b.lo.array()).any()) throw DomainError("chart boxes must have positive extent");
  }
  if (period_.size() == 0) period_ = Vec::Zero(dim_);
  if (period_.size() != dim_) throw DimensionMismatch("period vector must match the base dimension");
}

std::optional<Vec> BaseAtlas::chart_shift(int chart, const Vec& x) const {
  const Box& b = box(chart);
  if (x.size() != dim_) throw DimensionMismatch("base point has the wrong dimension");
  Vec shift = Vec::Zero(dim_);
  for (int j = 0; j < dim_; ++j) {
    if (period_(j) > 0.0) {
      // Smallest shift that lands at or above lo.
      const double k = std::ceil((b.lo(j) - x(j)) / period_(j) - 1e-12);
      shift(j) = k * period_(j);
    }
  }
  if (!b.contains(x + shift)) return std::nullopt;
  return shift;
}

std::optional<Vec> BaseAtlas::to_chart(int chart, const Vec& x) const {
  auto shift = chart_shift(chart, x);
  if (!shift) return std::nullopt;
  return Vec(x + *shift);
}

double BaseAtlas::margin(int chart, const Vec& x) const {
  auto local = to_chart(chart, x);
  if (!local) return -std::numeric_limits<double>::infinity();
  return box(chart).margin(*local);
}

int BaseAtlas::best_chart(const Vec& x, int exclude) const {
  int best = -1;
  double best_margin = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < chart_count(); ++a) {
    if (a == exclude) continue;
    const double m = margin(a, x);
    if (m > best_margin) {
      best_margin = m;
      best = a;
    }
  }
  if (best < 0 || best_margin < 0.0) throw DomainError("base point lies in no chart");
  return best;
}

std::vector<Vec> BaseAtlas::sample_overlap(const std::vector<int>& charts, int count, std::mt19937_64& rng) const {
  std::vector<Vec> out;
  if (charts.empty()) return out;
  const Box& first = box(charts.front());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int attempt = 0; attempt < 400 * count && static_cast<int>(out.size()) < count; ++attempt) {
    Vec x(dim_);
    for (int j = 0; j < dim_; ++j) x(j) = first.lo(j) + (first.hi(j) - first.lo(j)) * unit(rng);
    bool inside = true;
    for (int c : charts) inside = inside && margin(c, x) > 1e-6;
    if (inside) out.push_back(x);
  }
  return out;
}

double BaseAtlas::cocycle_residual(int samples, std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int a = 0; a < chart_count(); ++a) {
    for (int b = 0; b < chart_count(); ++b) {
      for (int c = 0; c < chart_count(); ++c) {
        for (const Vec& x : sample_overlap({a, b, c}, samples, rng)) {
          // a -> b -> c against a -> c directly.
          const Vec via = *to_chart(c, *to_chart(b, x));
          worst = std::max(worst, (via - *to_chart(c, x)).norm());
        }
      }
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// SystemSpec

SystemSpec::SystemSpec(BaseAtlas base, FiberModel fiber, LieAlgebra algebra, std::vector<Representation> eta,
                       std::vector<BundleTransition> transitions)
    : base_(std::move(base)),
      fiber_(std::move(fiber)),
      algebra_(std::move(algebra)),
      eta_(std::move(eta)),
      transitions_(std::move(transitions)) {
  if (eta_.empty()) throw DimensionMismatch("a system needs an action per chart (or one shared action)");
  if (eta_.size() != 1 && static_cast<int>(eta_.size()) != base_.chart_count()) {
    throw DimensionMismatch("one action per chart is required");
  }
  for (const Representation& rep : eta_) {
    if (rep.algebra_dim() != algebra_.dim()) throw DimensionMismatch("action and Lie algebra dimensions differ");
    if (rep.fiber_dim() != fiber_.ambient_dim()) throw DimensionMismatch("action and fiber dimensions differ");
  }
  for (const BundleTransition& t : transitions_) {
    if (t.to < 0 || t.from < 0 || t.to >= base_.chart_count() || t.from >= base_.chart_count()) {
      throw DomainError("bundle transition refers to an unknown chart");
    }
  }
}

const Representation& SystemSpec::eta(int chart) const {
  if (chart < 0 || chart >= base_.chart_count()) throw ChartMismatch("unknown chart " + std::to_string(chart));
  return eta_.size() == 1 ? eta_.front() : eta_[chart];
}

Mat SystemSpec::transition(int to, int from, const Vec& x_from) const {
  const int n = eta(from).matrix_size();
  if (to == from) return Mat::Identity(n, n);
  for (const BundleTransition& t : transitions_) {
    if (t.to == to && t.from == from) return t.acting(x_from);
  }
  for (const BundleTransition& t : transitions_) {
    if (t.to == from && t.from == to) {
      auto x_to = base_.to_chart(to, x_from);
      if (!x_to) throw ChartMismatch("transition evaluated outside the overlap");
      return t.acting(*x_to).inverse();
    }
  }
  return Mat::Identity(n, n);
}

SystemSpec SystemSpec::with_fiber(FiberModel fiber) const {
  SystemSpec out = *this;
  out.fiber_ = std::move(fiber);
  return out;
}

void SystemSpec::require_in_chart(int chart, const Vec& x) const {
  if (chart < 0 || chart >= base_.chart_count()) throw ChartMismatch("unknown chart " + std::to_string(chart));
  if (!base_.box(chart).contains(x)) throw ChartMismatch("point is outside chart " + std::to_string(chart));
}

EtaValue eval_eta(const SystemSpec& sys, int chart, const Vec& x, const Vec& xi, const Vec& v, const Vec& s) {
  sys.require_in_chart(chart, x);
  if (xi.size() != sys.base_dim()) throw DimensionMismatch("base tangent has the wrong dimension");
  return {xi, sys.eta(chart).eval(v, s)};
}

// ---------------------------------------------------------------------------
// Sections and brackets

bool SectionH::is_zero(const PolyMap& p) {
  return std::all_of(p.terms().begin(), p.terms().end(), [](const auto& t) { return t.second.isZero(0.0); });
}

SectionH SectionH::vertical_section(int chart, PolyMap v) {
  const int m = v.in_dim();
  return SectionH{chart, PolyMap(m, m), std::move(v)};
}

SectionH bracket_H(const SystemSpec& sys, const SectionH& h1, const SectionH& h2) {
  if (h1.chart != h2.chart) throw ChartMismatch("bracket_H needs sections on a common chart");
  const int m = sys.base_dim();
  const int d = sys.algebra_dim();
  if (h1.base_field.in_dim() != m || h2.base_field.in_dim() != m || h1.vertical.out_dim() != d ||
      h2.vertical.out_dim() != d) {
    throw DimensionMismatch("section data does not match the system");
  }
  const LieAlgebra& lie = sys.algebra();
  SectionH out{h1.chart, PolyMap(m, m), PolyMap(m, d)};
  if (!(h1.is_vertical() && h2.is_vertical())) {
    out.base_field = h2.base_field.derivative_along(h1.base_field) - h1.base_field.derivative_along(h2.base_field);
  }
  out.vertical = PolyMap::bilinear(h1.vertical, h2.vertical, d,
                                   [&lie](const Vec& a, const Vec& b) { return lie.bracket(a, b); }) +
                 h2.vertical.derivative_along(h1.base_field) - h1.vertical.derivative_along(h2.base_field);
  return out;
}

VectorField pushforward(const SystemSpec& sys, const SectionH& h) {
  const int m = sys.base_dim();
  const int k = sys.fiber_dim();
  const Representation rep = sys.eta(h.chart);
  const SectionH sec = h;
  auto eval = [rep, sec, m, k](const Vec& p) -> Vec {
    const Vec x = p.head(m);
    const Vec s = p.tail(k);
    Vec out(m + k);
    out.head(m) = sec.base_field(x);
    out.tail(k) = rep.eval(sec.vertical(x), s);
    return out;
  };
  auto jac = [rep, sec, m, k](const Vec& p) -> Mat {
    const Vec x = p.head(m);
    const Vec s = p.tail(k);
    Mat j = Mat::Zero(m + k, m + k);
    j.topLeftCorner(m, m) = sec.base_field.jacobian(x);
    const Mat dv = sec.vertical.jacobian(x);
    for (int c = 0; c < m; ++c) j.block(m, c, k, 1) = rep.eval(dv.col(c), s);
    j.bottomRightCorner(k, k) = rep.field_matrix(sec.vertical(x));
    return j;
  };
  return VectorField(m + k, eval, jac);
}

// ---------------------------------------------------------------------------
// Probes

CompletenessVerdict completeness_probe(const SystemSpec& sys, int chart, const Vec& x, const Vec& v, double horizon,
                                       int samples, std::uint64_t seed, int steps_per_unit,
                                       const std::vector<Vec>& starts) {
  if (!(horizon > 0.0)) throw DomainError("completeness probe needs a positive horizon");
  sys.require_in_chart(chart, x);
  CompletenessVerdict verdict;
  verdict.horizon = horizon;
  const VectorField field = fundamental_field(sys.eta(chart), v);
  std::vector<Vec> points = starts;
  if (points.empty()) {
    std::mt19937_64 rng(seed);
    for (int i = 0; i < samples; ++i) points.push_back(sys.fiber().sample(rng));
  }
  FlowOptions options;
  options.domain = sys.fiber().flow_domain();
  options.estimate_error = false;
  const int steps = std::max(1, static_cast<int>(std::ceil(steps_per_unit * horizon)));
  double first = std::numeric_limits<double>::infinity();
  for (const Vec& s0 : points) {
    for (double direction : {1.0, -1.0}) {
      try {
        integrate_flow(field, s0, 0.0, direction * horizon, steps, options);
      } catch (const EscapeDetected& e) {
        if (std::abs(e.time()) < first) {
          first = std::abs(e.time());
          verdict.complete = false;
          verdict.escape_time = e.time();
          verdict.start = s0;
        }
      }
    }
  }
  return verdict;
}

SystemSpec restrict_to_subbundle(const SystemSpec& sys, std::function<bool(const Vec&)> predicate,
                                 const std::string& label) {
  return restrict_to_subbundle(sys, sys.fiber().restricted(std::move(predicate), label));
}

SystemSpec restrict_to_subbundle(const SystemSpec& sys, const FiberModel& restricted_fiber) {
  if (restricted_fiber.ambient_dim() != sys.fiber_dim()) throw DimensionMismatch("restricted fiber dimension");
  std::mt19937_64 rng(0);
  restricted_fiber.sample(rng);  // throws EmptyFiber
  return sys.with_fiber(restricted_fiber);
}

MonicVerdict check_monic(const SystemSpec& sys, int samples, std::uint64_t seed, double threshold) {
  const int d = sys.algebra_dim();
  if (samples < d) throw DomainError("check_monic needs at least dim V samples");
  MonicVerdict verdict;
  verdict.worst_ratio = std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(seed);
  std::vector<Vec> points;
  for (int i = 0; i < samples; ++i) points.push_back(sys.fiber().sample(rng));
  for (int a = 0; a < sys.base().chart_count(); ++a) {
    const Representation& rep = sys.eta(a);
    const int k = sys.fiber_dim();
    Mat stacked(static_cast<Eigen::Index>(k) * samples, d);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < samples; ++j) stacked.block(j * k, i, k, 1) = rep.eval(Vec::Unit(d, i), points[j]);
    }
    const Vec sv = Eigen::JacobiSVD<Mat>(stacked).singularValues();
    const double ratio = sv(0) > 0.0 ? sv(d - 1) / sv(0) : 0.0;
    verdict.worst_ratio = std::min(verdict.worst_ratio, ratio);
  }
  verdict.monic = verdict.worst_ratio > threshold;
  return verdict;
}

double representation_residual(const SystemSpec& sys, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int d = sys.algebra_dim();
  double worst = 0.0;
  for (int a = 0; a < sys.base().chart_count(); ++a) {
    const Representation& rep = sys.eta(a);
    for (int n = 0; n < samples; ++n) {
      const Vec s = sys.fiber().sample(rng);
      for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
          const Vec ei = Vec::Unit(d, i);
          const Vec ej = Vec::Unit(d, j);
          const Vec lhs = lie_bracket(fundamental_field(rep, ei), fundamental_field(rep, ej), s);
          const Vec rhs = rep.eval(sys.algebra().bracket(ei, ej), s);
          worst = std::max(worst, (lhs - rhs).norm());
        }
      }
    }
  }
  return worst;
}

double transition_compatibility_residual(const SystemSpec& sys, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int d = sys.algebra_dim();
  const int k = sys.fiber_dim();
  double worst = 0.0;
  for (int a = 0; a < sys.base().chart_count(); ++a) {
    for (int b = 0; b < sys.base().chart_count(); ++b) {
      if (a == b) continue;
      const Representation& from = sys.eta(a);
      const Representation& to = sys.eta(b);
      for (const Vec& x : sys.base().sample_overlap({a, b}, samples, rng)) {
        const Mat psi = sys.transition(b, a, x);
        const Mat linear = psi.topLeftCorner(k, k);
        for (int i = 0; i < d; ++i) {
          const Vec v = Vec::Unit(d, i);
          double fit = 0.0;
          const Vec twisted = to.field_coordinates(psi * from.augmented_field(v) * psi.inverse(), fit);
          worst = std::max(worst, fit);
          const Vec s = sys.fiber().sample(rng);
          const Vec pushed = linear * from.eval(v, s);
          worst = std::max(worst, (to.eval(twisted, from.apply_acting(psi, s)) - pushed).norm());
        }
      }
    }
  }
  return worst;
}

namespace {

struct CocycleDefect {
  double residual = 0.0;
  Vec worst;
};

CocycleDefect cocycle_defect(const SystemSpec& sys, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  CocycleDefect defect;
  const int charts = sys.base().chart_count();
  auto note = [&defect](double r, const Vec& x) {
    if (r > defect.residual) {
      defect.residual = r;
      defect.worst = x;
    }
  };
  for (int a = 0; a < charts; ++a) {
    for (int b = 0; b < charts; ++b) {
      for (const Vec& x : sys.base().sample_overlap({a, b}, samples, rng)) {
        const Mat ab = sys.transition(b, a, x);
        const Mat ba = sys.transition(a, b, *sys.base().to_chart(b, x));
        note((ba * ab - Mat::Identity(ab.rows(), ab.cols())).norm(), x);
      }
      for (int c = 0; c < charts; ++c) {
        for (const Vec& x : sys.base().sample_overlap({a, b, c}, samples, rng)) {
          const Vec xb = *sys.base().to_chart(b, x);
          const Vec xc = *sys.base().to_chart(c, x);
          const Mat loop = sys.transition(a, c, xc) * sys.transition(c, b, xb) * sys.transition(b, a, x);
          note((loop - Mat::Identity(loop.rows(), loop.cols())).norm(), x);
        }
      }
    }
  }
  return defect;
}

}  // namespace

double bundle_cocycle_residual(const SystemSpec& sys, int samples, std::uint64_t seed) {
  return cocycle_defect(sys, samples, seed).residual;
}

SystemSpec build_associated_system(const BaseAtlas& base, std::vector<BundleTransition> cocycle,
                                   const Representation& action, const FiberModel& fiber, int samples,
                                   double tolerance, std::uint64_t seed) {
  return build_associated_system(base, std::move(cocycle), action.algebra(), action, fiber, samples, tolerance, seed);
}

SystemSpec build_associated_system(const BaseAtlas& base, std::vector<BundleTransition> cocycle,
                                   const LieAlgebra& algebra, const Representation& action, const FiberModel& fiber,
                                   int samples, double tolerance, std::uint64_t seed) {
  SystemSpec sys(base, fiber, algebra, {action}, std::move(cocycle));
  const CocycleDefect defect = cocycle_defect(sys, samples, seed);
  if (defect.residual > tolerance) {
    throw CocycleViolation("transition functions do not form a cocycle", defect.residual, defect.worst);
  }
  return sys;
}

}  // namespace fibersys
