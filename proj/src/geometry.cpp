#include "fibersys/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace fibersys {

Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& p, double rel_step) {
  const double h = rel_step * std::max(1.0, p.cwiseAbs().maxCoeff());
  Vec probe = p;
  const Vec f0 = f(p);
  Mat jac(f0.size(), p.size());
  for (int j = 0; j < p.size(); ++j) {
    probe(j) = p(j) + h;
    const Vec fp = f(probe);
    probe(j) = p(j) - h;
    const Vec fm = f(probe);
    probe(j) = p(j);
    jac.col(j) = (fp - fm) / (2.0 * h);
  }
  return jac;
}

VectorField::VectorField(int dim, Eval eval, Jacobian jacobian, double fd_step)
    : dim_(dim), eval_(std::move(eval)), jacobian_(std::move(jacobian)), fd_step_(fd_step) {}

VectorField VectorField::zero(int dim) {
  return VectorField(
      dim, [dim](const Vec&) { return Vec::Zero(dim); }, [dim](const Vec&) { return Mat::Zero(dim, dim); });
}

VectorField VectorField::constant(const Vec& value) {
  const auto n = static_cast<int>(value.size());
  return VectorField(
      n, [value](const Vec&) { return value; }, [n](const Vec&) { return Mat::Zero(n, n); });
}

VectorField VectorField::affine(const Mat& a, const Vec& b) {
  if (a.rows() != a.cols() || a.rows() != b.size()) {
    throw DimensionMismatch("affine field needs a square matrix and matching offset");
  }
  return VectorField(
      static_cast<int>(b.size()), [a, b](const Vec& p) -> Vec { return a * p + b; },
      [a](const Vec&) { return a; });
}

Vec VectorField::operator()(const Vec& p) const {
  if (p.size() != dim_) {
    throw DimensionMismatch("vector field of dimension " + std::to_string(dim_) + " evaluated at a point of dimension " +
                            std::to_string(p.size()));
  }
  return eval_(p);
}

Mat VectorField::jacobian(const Vec& p) const {
  if (jacobian_) return jacobian_(p);
  return fd_jacobian(eval_, p, fd_step_);
}

VectorField VectorField::without_jacobian() const { return VectorField(dim_, eval_, {}, fd_step_); }

namespace {

Vec rk4_step(const TimeDependentField& f, double t, const Vec& u, double h) {
  const Vec k1 = f(t, u);
  const Vec k2 = f(t + 0.5 * h, u + 0.5 * h * k1);
  const Vec k3 = f(t + 0.5 * h, u + 0.5 * h * k2);
  const Vec k4 = f(t + h, u + h * k3);
  return u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

bool valid_state(const Vec& u, const FlowOptions& options) {
  if (!u.allFinite()) return false;
  if (u.size() > 0 && u.cwiseAbs().maxCoeff() > options.blowup_bound) return false;
  if (options.domain.contains && !options.domain.contains(u)) return false;
  return true;
}

Vec step_normalized(const TimeDependentField& f, double t, const Vec& u, double h, const FlowOptions& options) {
  Vec next = rk4_step(f, t, u, h);
  if (options.domain.normalize && next.allFinite()) options.domain.normalize(next);
  return next;
}

FlowResult run_rk4(const TimeDependentField& field, const Vec& start, double t0, double t1, int steps,
                   const FlowOptions& options) {
  FlowResult result;
  Vec u = start;
  if (options.domain.normalize) options.domain.normalize(u);
  if (!valid_state(u, options)) throw EscapeDetected(t0, u);
  const double h = (t1 - t0) / steps;
  if (options.record) {
    result.times.reserve(steps + 1);
    result.states.reserve(steps + 1);
    result.times.push_back(t0);
    result.states.push_back(u);
  }
  for (int i = 0; i < steps; ++i) {
    const double t = t0 + i * h;
    Vec next = step_normalized(field, t, u, h, options);
    if (!valid_state(next, options)) {
      // Largest fraction of this step that stays valid.
      double lo = 0.0;
      double hi = 1.0;
      Vec last = u;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        Vec trial = step_normalized(field, t, u, mid * h, options);
        if (valid_state(trial, options)) {
          lo = mid;
          last = std::move(trial);
        } else {
          hi = mid;
        }
      }
      throw EscapeDetected(t + lo * h, last);
    }
    u = std::move(next);
    if (options.record) {
      result.times.push_back(i + 1 == steps ? t1 : t + h);
      result.states.push_back(u);
    }
  }
  result.end = u;
  return result;
}

}  // namespace

FlowResult integrate_flow(const TimeDependentField& field, const Vec& start, double t0, double t1, int steps,
                          const FlowOptions& options) {
  if (steps < 1) throw DomainError("integrate_flow needs at least one step");
  FlowResult result = run_rk4(field, start, t0, t1, steps, options);
  if (options.estimate_error) {
    FlowOptions fine_options = options;
    fine_options.record = false;
    fine_options.estimate_error = false;
    try {
      const FlowResult fine = run_rk4(field, start, t0, t1, 2 * steps, fine_options);
      result.error_estimate = (result.end - fine.end).norm() * 16.0 / 15.0;
    } catch (const EscapeDetected&) {
      result.error_estimate = std::numeric_limits<double>::infinity();
    }
  }
  return result;
}

FlowResult integrate_flow(const VectorField& field, const Vec& start, double t0, double t1, int steps,
                          const FlowOptions& options) {
  if (start.size() != field.dim()) throw DimensionMismatch("flow start point has the wrong dimension");
  return integrate_flow([&field](double, const Vec& p) { return field(p); }, start, t0, t1, steps, options);
}

Vec lie_bracket(const VectorField& x, const VectorField& y, const Vec& at) {
  if (x.dim() != y.dim() || at.size() != x.dim()) {
    throw DimensionMismatch("lie_bracket: fields and point must share a dimension");
  }
  if (!at.allFinite()) throw DomainError("lie_bracket evaluated at a non-finite point");
  return y.jacobian(at) * x(at) - x.jacobian(at) * y(at);
}

Vec flow_commutator(const VectorField& x, const VectorField& y, const Vec& at, double t, double s, int steps,
                    const FlowOptions& options) {
  FlowOptions leg = options;
  leg.estimate_error = false;
  leg.record = false;
  Vec p = at;
  if (t != 0.0) p = integrate_flow(y, p, 0.0, t, steps, leg).end;
  if (s != 0.0) p = integrate_flow(x, p, 0.0, s, steps, leg).end;
  if (t != 0.0) p = integrate_flow(y, p, 0.0, -t, steps, leg).end;
  if (s != 0.0) p = integrate_flow(x, p, 0.0, -s, steps, leg).end;
  return p;
}

// ---------------------------------------------------------------------------
// Curves

Curve::Curve(double t0, double t1, Eval eval, Eval derivative, std::vector<double> breakpoints)
    : t0_(t0), t1_(t1), eval_(std::move(eval)), derivative_(std::move(derivative)), breakpoints_(std::move(breakpoints)) {
  if (!(t1 > t0)) throw DomainError("curve parameter interval must be nonempty");
  std::sort(breakpoints_.begin(), breakpoints_.end());
  breakpoints_.erase(std::remove_if(breakpoints_.begin(), breakpoints_.end(),
                                    [&](double b) { return b <= t0_ || b >= t1_; }),
                     breakpoints_.end());
  breakpoints_.erase(std::unique(breakpoints_.begin(), breakpoints_.end()), breakpoints_.end());
}

Vec Curve::derivative_within(double t, double a, double b) const {
  const double nudge = 1e-11 * std::max(1.0, std::max(std::abs(a), std::abs(b)));
  if (b - a > 4.0 * nudge) t = std::clamp(t, a + nudge, b - nudge);
  return derivative_(t);
}

int Curve::dim() const { return static_cast<int>(eval_(t0_).size()); }

Curve Curve::polyline(const std::vector<Vec>& points) {
  if (points.size() < 2) throw DomainError("polyline needs at least two points");
  const auto segments = static_cast<int>(points.size()) - 1;
  auto index = [segments](double t) { return std::clamp(static_cast<int>(std::floor(t)), 0, segments - 1); };
  std::vector<double> breaks;
  for (int i = 1; i < segments; ++i) breaks.push_back(i);
  return Curve(
      0.0, segments,
      [points, index](double t) -> Vec {
        const int i = index(t);
        return points[i] + (t - i) * (points[i + 1] - points[i]);
      },
      [points, index](double t) -> Vec {
        const int i = index(t);
        return points[i + 1] - points[i];
      },
      breaks);
}

Curve Curve::segment(const Vec& from, const Vec& to) { return polyline({from, to}); }

Curve Curve::polynomial(const std::vector<Vec>& coeffs, double t0, double t1) {
  if (coeffs.empty()) throw DomainError("polynomial curve needs coefficients");
  return Curve(
      t0, t1,
      [coeffs](double t) -> Vec {
        Vec acc = coeffs.back();
        for (auto it = coeffs.rbegin() + 1; it != coeffs.rend(); ++it) acc = acc * t + *it;
        return acc;
      },
      [coeffs](double t) -> Vec {
        Vec acc = Vec::Zero(coeffs.front().size());
        for (std::size_t i = coeffs.size() - 1; i >= 1; --i) acc = acc * t + static_cast<double>(i) * coeffs[i];
        return acc;
      });
}

Curve Curve::arc(const Vec& center, double radius, double a0, double a1) {
  if (center.size() != 2) throw DimensionMismatch("arc curves are planar");
  return Curve(
      0.0, 1.0,
      [=](double t) -> Vec {
        const double a = a0 + t * (a1 - a0);
        return center + radius * Eigen::Vector2d(std::cos(a), std::sin(a));
      },
      [=](double t) -> Vec {
        const double a = a0 + t * (a1 - a0);
        return radius * (a1 - a0) * Eigen::Vector2d(-std::sin(a), std::cos(a));
      });
}

Curve Curve::radial(const Vec& center, const Vec& x) {
  const Vec dir = x - center;
  return Curve(
      0.0, 1.0, [center, dir](double t) -> Vec { return center + t * dir; }, [dir](double) -> Vec { return dir; });
}

Curve Curve::constant(const Vec& x, double t0, double t1) {
  const Vec zero = Vec::Zero(x.size());
  return Curve(
      t0, t1, [x](double) { return x; }, [zero](double) { return zero; });
}

namespace {

// phi(0)=0, phi(1)=1, phi'(0)=phi'(1)=0.
double bump(double s) { return s - std::sin(2.0 * std::numbers::pi * s) / (2.0 * std::numbers::pi); }
double bump_derivative(double s) { return 1.0 - std::cos(2.0 * std::numbers::pi * s); }

}  // namespace

Curve Curve::concatenate(const std::vector<Curve>& pieces, const Vec& period) {
  if (pieces.empty()) throw DomainError("cannot concatenate zero curves");
  std::vector<Curve> aligned;
  aligned.reserve(pieces.size());
  aligned.push_back(pieces.front());
  for (std::size_t i = 1; i < pieces.size(); ++i) {
    const Vec prev_end = aligned.back()(aligned.back().t1());
    const Vec start = pieces[i](pieces[i].t0());
    Vec offset = Vec::Zero(start.size());
    for (int j = 0; j < period.size() && j < start.size(); ++j) {
      if (period(j) > 0.0) offset(j) = period(j) * std::round((prev_end(j) - start(j)) / period(j));
    }
    Curve shifted = pieces[i].shifted(offset);
    if ((shifted(shifted.t0()) - prev_end).norm() > 1e-9) {
      throw DomainError("concatenated curves do not meet at a junction");
    }
    aligned.push_back(std::move(shifted));
  }

  const auto n = static_cast<double>(aligned.size());
  auto locate = [n](double t, std::size_t count) {
    const auto i = std::min(static_cast<std::size_t>(std::max(0.0, std::floor(t * n))), count - 1);
    return std::pair{i, t * n - static_cast<double>(i)};
  };
  std::vector<double> breaks;
  for (std::size_t i = 0; i < aligned.size(); ++i) {
    const double base = static_cast<double>(i) / n;
    if (i > 0) breaks.push_back(base);
    // Interior breakpoints of a piece, mapped through the inverse bump by bisection.
    for (double b : aligned[i].breakpoints()) {
      const double target = (b - aligned[i].t0()) / (aligned[i].t1() - aligned[i].t0());
      double lo = 0.0;
      double hi = 1.0;
      for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        (bump(mid) < target ? lo : hi) = mid;
      }
      breaks.push_back(base + 0.5 * (lo + hi) / n);
    }
  }
  return Curve(
      0.0, 1.0,
      [aligned, locate](double t) -> Vec {
        const auto [i, s] = locate(t, aligned.size());
        const Curve& c = aligned[i];
        return c(c.t0() + bump(s) * (c.t1() - c.t0()));
      },
      [aligned, locate, n](double t) -> Vec {
        const auto [i, s] = locate(t, aligned.size());
        const Curve& c = aligned[i];
        return c.derivative(c.t0() + bump(s) * (c.t1() - c.t0())) * (bump_derivative(s) * n * (c.t1() - c.t0()));
      },
      breaks);
}

Curve Curve::reversed() const {
  const double a = t0_;
  const double b = t1_;
  auto eval = eval_;
  auto deriv = derivative_;
  std::vector<double> breaks;
  for (double bp : breakpoints_) breaks.push_back(a + b - bp);
  return Curve(
      a, b, [eval, a, b](double t) { return eval(a + b - t); }, [deriv, a, b](double t) -> Vec { return -deriv(a + b - t); },
      breaks);
}

Curve Curve::shifted(const Vec& offset) const {
  auto eval = eval_;
  return Curve(
      t0_, t1_, [eval, offset](double t) -> Vec { return eval(t) + offset; }, derivative_, breakpoints_);
}

Curve Curve::reparametrized(double s0, double s1, std::function<double(double)> phi,
                            std::function<double(double)> dphi) const {
  auto eval = eval_;
  auto deriv = derivative_;
  std::vector<double> breaks;
  for (double bp : breakpoints_) {
    double lo = s0;
    double hi = s1;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      (phi(mid) < bp ? lo : hi) = mid;
    }
    breaks.push_back(0.5 * (lo + hi));
  }
  return Curve(
      s0, s1, [eval, phi](double s) { return eval(phi(s)); },
      [deriv, phi, dphi](double s) -> Vec { return deriv(phi(s)) * dphi(s); }, breaks);
}

Curve Curve::restricted(double a, double b) const {
  if (a < t0_ || b > t1_) throw DomainError("restriction interval outside the curve's domain");
  return Curve(a, b, eval_, derivative_, breakpoints_);
}

Curve Curve::normalized() const {
  const double a = t0_;
  const double len = t1_ - t0_;
  return reparametrized(
      0.0, 1.0, [a, len](double s) { return a + s * len; }, [len](double) { return len; });
}

double curve_length(const Curve& c) {
  // 5-point Gauss-Legendre on each of 64 panels per smooth piece.
  static constexpr std::array<double, 5> nodes{-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                                               0.9061798459386640};
  static constexpr std::array<double, 5> weights{0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                                 0.4786286704993665, 0.2369268850561891};
  std::vector<double> knots{c.t0()};
  knots.insert(knots.end(), c.breakpoints().begin(), c.breakpoints().end());
  knots.push_back(c.t1());
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
    const int panels = 64;
    const double width = (knots[k + 1] - knots[k]) / panels;
    for (int p = 0; p < panels; ++p) {
      const double mid = knots[k] + (p + 0.5) * width;
      for (std::size_t q = 0; q < nodes.size(); ++q) {
        total += weights[q] * 0.5 * width * c.derivative(mid + 0.5 * width * nodes[q]).norm();
      }
    }
  }
  return total;
}

}  // namespace fibersys
