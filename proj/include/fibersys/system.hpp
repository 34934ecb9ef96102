#pragma once

// Canonical presentation of a system of vector fields (H, eta) on a bundle
// E -> M with standard fiber S: in chart alpha, eta sends (xi, v) in TU x V to
// the projectable field (xi, eta^alpha(v)) on U x S.

#include "fibersys/fiber.hpp"
#include "fibersys/lie.hpp"
#include "fibersys/polynomial.hpp"

#include <functional>
#include <optional>
#include <random>
#include <vector>

namespace fibersys {

struct Box {
  Vec lo;
  Vec hi;

  int dim() const { return static_cast<int>(lo.size()); }
  bool contains(const Vec& x) const;
  // Distance to the boundary, negative outside.
  double margin(const Vec& x) const;
  Vec center() const { return 0.5 * (lo + hi); }
};

// Base charts are boxes in one covering coordinate space. Coordinates with a
// positive period are identified modulo that period, so a chart contains a
// point if some periodic shift of it lies in the box; chart transitions are
// those shifts.
class BaseAtlas {
 public:
  explicit BaseAtlas(std::vector<Box> charts, Vec period = Vec());

  int dim() const { return dim_; }
  int chart_count() const { return static_cast<int>(charts_.size()); }
  const Box& box(int chart) const { return charts_.at(chart); }
  const Vec& period() const { return period_; }

  // Periodic shift that moves x into the chart box, if any.
  std::optional<Vec> chart_shift(int chart, const Vec& x) const;
  std::optional<Vec> to_chart(int chart, const Vec& x) const;
  bool in_chart(int chart, const Vec& x) const { return chart_shift(chart, x).has_value(); }
  double margin(int chart, const Vec& x) const;
  // Chart with the largest margin at x (lowest index on ties). Throws
  // DomainError if no chart contains x.
  int best_chart(const Vec& x, int exclude = -1) const;
  // u_alpha^{-1}(0): the chart box centre.
  Vec center(int chart) const { return box(chart).center(); }

  // Points (in chart-`charts[0]` coordinates) that lie in every listed chart.
  std::vector<Vec> sample_overlap(const std::vector<int>& charts, int count, std::mt19937_64& rng) const;
  // Worst defect of the coordinate-change cocycle on sampled triple overlaps.
  double cocycle_residual(int samples, std::uint64_t seed) const;

 private:
  int dim_;
  std::vector<Box> charts_;
  Vec period_;
};

// Fiber transition psi_{to,from}: the matrix acting on chart-`from` fiber
// coordinates that produces chart-`to` ones, as a function of the base point
// in chart-`from` coordinates.
struct BundleTransition {
  int to;
  int from;
  std::function<Mat(const Vec&)> acting;
};

class SystemSpec {
 public:
  // One representation per chart, or a single one shared by all charts.
  SystemSpec(BaseAtlas base, FiberModel fiber, LieAlgebra algebra, std::vector<Representation> eta,
             std::vector<BundleTransition> transitions = {});

  const BaseAtlas& base() const { return base_; }
  const FiberModel& fiber() const { return fiber_; }
  const LieAlgebra& algebra() const { return algebra_; }
  const Representation& eta(int chart) const;
  const std::vector<BundleTransition>& transitions() const { return transitions_; }

  int base_dim() const { return base_.dim(); }
  int fiber_dim() const { return fiber_.ambient_dim(); }
  int algebra_dim() const { return algebra_.dim(); }

  // psi_{to,from} at x (chart-`from` coordinates). Identity for to == from and
  // for overlaps without a registered transition.
  Mat transition(int to, int from, const Vec& x_from) const;

  SystemSpec with_fiber(FiberModel fiber) const;
  // Throws ChartMismatch unless x (chart coordinates) lies in the chart box.
  void require_in_chart(int chart, const Vec& x) const;

 private:
  BaseAtlas base_;
  FiberModel fiber_;
  LieAlgebra algebra_;
  std::vector<Representation> eta_;
  std::vector<BundleTransition> transitions_;
};

struct EtaValue {
  Vec base;
  Vec fiber;
};

// (xi, eta^alpha(v)(s)).
EtaValue eval_eta(const SystemSpec& sys, int chart, const Vec& x, const Vec& xi, const Vec& v, const Vec& s);

// A section of H in chart form x -> (X(x), v(x)) with polynomial data.
struct SectionH {
  int chart = 0;
  PolyMap base_field;  // X: R^m -> R^m
  PolyMap vertical;    // v: R^m -> V

  bool is_vertical() const { return is_zero(base_field); }
  static bool is_zero(const PolyMap& p);
  static SectionH vertical_section(int chart, PolyMap v);
};

// ([X1, X2], [v1, v2]^V + Dv2.X1 - Dv1.X2).
SectionH bracket_H(const SystemSpec& sys, const SectionH& h1, const SectionH& h2);

// The projectable field (x, s) -> (X(x), eta^alpha(v(x))(s)) on U x S.
VectorField pushforward(const SystemSpec& sys, const SectionH& h);

struct CompletenessVerdict {
  bool complete = true;
  double horizon = 0.0;      // T that was probed
  double escape_time = 0.0;  // signed time of the first escape
  Vec start;                 // fiber start point that escaped
};

// Integrates eta^alpha(v) for t in [-T, T] from `samples` fiber points.
CompletenessVerdict completeness_probe(const SystemSpec& sys, int chart, const Vec& x, const Vec& v, double horizon,
                                       int samples, std::uint64_t seed = 0,
                                       int steps_per_unit = kDefaultStepsPerUnit,
                                       const std::vector<Vec>& starts = {});

// Same eta data on the open fiber subset picked out by `predicate`.
SystemSpec restrict_to_subbundle(const SystemSpec& sys, std::function<bool(const Vec&)> predicate,
                                 const std::string& label = "predicate");
SystemSpec restrict_to_subbundle(const SystemSpec& sys, const FiberModel& restricted_fiber);

struct MonicVerdict {
  bool monic = true;
  double worst_ratio = 0.0;  // smallest sigma_min / sigma_max over charts
};

// Sampled rank test of V -> stacked field values. A probe, not a proof.
MonicVerdict check_monic(const SystemSpec& sys, int samples, std::uint64_t seed = 0, double threshold = 1e-8);

// max |[rho(e_i), rho(e_j)](s) - rho([e_i, e_j])(s)| over basis pairs and samples.
double representation_residual(const SystemSpec& sys, int samples, std::uint64_t seed = 0);

// On overlaps: eta^beta(Ad-twisted v)(psi s) against the push-forward of
// eta^alpha(v) by psi.
double transition_compatibility_residual(const SystemSpec& sys, int samples, std::uint64_t seed = 0);

// max |psi_ab psi_bc psi_ca - I| and |psi_ab psi_ba - I| on sampled overlaps.
double bundle_cocycle_residual(const SystemSpec& sys, int samples, std::uint64_t seed = 0);

// The system induced on the associated bundle by a group-valued cocycle and an
// action: V = Lie algebra of the group, eta^alpha = fundamental fields.
// Throws CocycleViolation if the cocycle defect exceeds `tolerance`.
SystemSpec build_associated_system(const BaseAtlas& base, std::vector<BundleTransition> cocycle,
                                   const Representation& action, const FiberModel& fiber, int samples = 32,
                                   double tolerance = 1e-8, std::uint64_t seed = 0);
// Same with the Lie algebra of the group given explicitly, for actions that
// are not effective.
SystemSpec build_associated_system(const BaseAtlas& base, std::vector<BundleTransition> cocycle,
                                   const LieAlgebra& algebra, const Representation& action, const FiberModel& fiber,
                                   int samples = 32, double tolerance = 1e-8, std::uint64_t seed = 0);

}  // namespace fibersys
