#pragma once

// Rebuilding a bundle atlas from parallel transport. Transports run from the
// base point x0 along c_alpha to the chart centre x_alpha and then radially to
// x; the transition cocycle comes from transports around the loops
// c_alpha . c_alpha^x . (c_beta^x)^-1 . c_beta^-1.

#include "fibersys/connection.hpp"

#include "json.hpp"

namespace fibersys {

class RadialAtlas {
 public:
  RadialAtlas(const BaseAtlas& base, const Vec& x0);

  const Vec& x0() const { return x0_; }
  int x0_chart() const { return x0_chart_; }
  int chart_count() const { return static_cast<int>(centers_.size()); }
  const Vec& center(int chart) const { return centers_.at(chart); }
  // Straight segment from x0 to the chart centre, in covering coordinates.
  const Curve& base_curve(int chart) const { return base_curves_.at(chart); }
  // t -> x_alpha + t (x - x_alpha) with x taken in chart coordinates.
  Curve radial(int chart, const Vec& x) const;
  const Vec& period() const { return period_; }

 private:
  BaseAtlas base_;
  Vec x0_;
  int x0_chart_;
  Vec period_;
  std::vector<Vec> centers_;
  std::vector<Curve> base_curves_;
};

struct ReconstructionOptions {
  int steps = 400;
  int samples_per_overlap = 16;
  double tolerance = 1e-6;
  std::uint64_t seed = 0;
};

// psi_alpha^-1 at x: the acting matrix of Pt(c_alpha^x, 1) Pt(c_alpha, 1), from
// the fiber over x0 (chart of x0) to chart-alpha coordinates over x.
Mat build_bundle_atlas(const Connection& conn, const RadialAtlas& ratlas, int chart, const Vec& x, int steps = 400);

// Transport around the loop for the pair (to, from) at x (chart-`from`
// coordinates). This is psi_to o psi_from^-1 as an acting matrix.
Mat cocycle_element(const Connection& conn, const RadialAtlas& ratlas, int to, int from, const Vec& x,
                    int steps = 400);

struct CocycleSample {
  int to;
  int from;
  Vec x;  // chart-`from` coordinates
  Mat acting;
  double inverse_residual = 0.0;  // |psi_from,to psi_to,from - I|
  double atlas_residual = 0.0;    // against B_to^-1 psi^sys B_from
};

struct Cocycle {
  std::vector<CocycleSample> samples;
  double identity_residual = 0.0;
  double inverse_residual = 0.0;
  double triple_residual = 0.0;
  double atlas_residual = 0.0;
  Vec worst_sample;
  // Evaluated on demand by loop transport, for build_associated_system.
  std::vector<BundleTransition> transitions;

  double worst() const;
};

// Samples every overlap. Throws CocycleViolation carrying the worst sample when
// an identity, inverse or triple residual exceeds options.tolerance.
Cocycle build_cocycle(const Connection& conn, const RadialAtlas& ratlas, const ReconstructionOptions& options = {});

struct FundamentalProjection {
  Vec coefficients;
  double residual = 0.0;
};

// Least squares of a fiber field onto span{eta^alpha(e_i)} at sampled fiber
// points. Throws BasisProjectionError above `gate`.
FundamentalProjection fundamental_field_projection(const SystemSpec& sys, int chart, const VectorField& field,
                                                   int samples = 24, std::uint64_t seed = 0, double gate = 1e-6);
FundamentalProjection fundamental_field_projection(const Connection& conn, int chart, const Vec& x, const Vec& xi,
                                                   int samples = 24, std::uint64_t seed = 0, double gate = 1e-6);

// The system on the reconstructed bundle, and the splitting in its
// trivialization: S'_j = B^-1 A(sigma e_j) B - B^-1 d_j B in coordinates.
struct AssociatedRoundTrip {
  RadialAtlas ratlas;
  Cocycle cocycle;
  Connection conn;
  int steps;

  // Transport in the original bundle and through the reconstructed one,
  // mapped back with the atlas. Returns |difference|.
  double compare(const Connection& original, const Curve& c, double t, const Vec& e0, int steps) const;
};

AssociatedRoundTrip associated_round_trip(const Connection& conn, const Vec& x0, const ReconstructionOptions& options = {});

// Per-overlap worst residuals, per-sample group elements and projection
// residuals at the chart centres.
nlohmann::json reconstruction_report(const Connection& conn, const RadialAtlas& ratlas, const Cocycle& cocycle);

}  // namespace fibersys
