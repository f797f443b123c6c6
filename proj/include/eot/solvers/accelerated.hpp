#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>

#include "eot/core/dual.hpp"
#include "eot/core/logsumexp.hpp"
#include "eot/core/types.hpp"
#include "eot/solvers/trace.hpp"

// Adaptive accelerated primal-dual method on a smooth dual phi(lambda) with
// lambda = (alpha, beta) in R^{2n}. The algorithm is generic in two policies:
//
//   Objective:  evaluate(lambda) -> {value, gradient, primal x(lambda)}
//               value(lambda)    -> phi(lambda)
//   Geometry:   delta(), prox(z, g, step) and the squared norm used by the
//               line-search exit test.
//
// APDAMD is the pairing <LogSumExpDual, MirrorMap>; the APDAGD baseline is
// <ExpSumDual, EuclideanGeometry>.

namespace eot {

struct DualEvaluation {
  double value = 0.0;
  Vector gradient;  ///< A x(lambda) - b
  Vector primal;    ///< x(lambda), row-major n^2
};

namespace detail {

template <bool Normalize>
class FusedDual {
 public:
  explicit FusedDual(const RegularizedInstance& inst) : inst_(inst), n_(inst.size()) {}

  std::size_t atoms() const noexcept { return n_; }
  const RegularizedInstance& instance() const noexcept { return inst_; }

  DualEvaluation evaluate(const Vector& lambda) const {
    DualEvaluation out;
    out.primal.resize(n_ * n_);
    const double log_mass = logits(lambda, out.primal);
    if constexpr (Normalize) {
      for (double& x : out.primal) x = std::exp(x - log_mass);
      out.value = inst_.eta() * log_mass - linear(lambda);
    } else {
      for (double& x : out.primal) x = std::exp(x);
      const double scaled = log_mass + std::log(inst_.eta());
      out.value = scaled > kMaxExpArgument ? std::numeric_limits<double>::infinity()
                                           : std::exp(scaled) - linear(lambda);
    }
    out.gradient.assign(2 * n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) {
        const double x = out.primal[i * n_ + j];
        out.gradient[i] += x;
        out.gradient[n_ + j] += x;
      }
    for (std::size_t i = 0; i < n_; ++i) {
      out.gradient[i] -= inst_.r()[i];
      out.gradient[n_ + i] -= inst_.c()[i];
    }
    return out;
  }

  /// phi(at + d) - phi(at) - <grad phi(at), d> for the point `at` was
  /// evaluated at, computed from x(at) without subtracting nearly equal dual
  /// values. With y_ij = (d_i + d_{n+j}) / eta the gap is
  /// eta (log sum x e^y - sum x y) for the softmax primal and
  /// eta sum x (e^y - 1 - y) for the exponential one.
  double bregman_gap(const DualEvaluation& at, const Vector& d) const {
    const double eta = inst_.eta();
    auto y = [&](std::size_t i, std::size_t j) { return (d[i] + d[n_ + j]) / eta; };
    if constexpr (Normalize) {
      double shift = 0.0;
      for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j) shift += at.primal[i * n_ + j] * y(i, j);
      double first = 0.0, rest = 0.0;
      for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j) {
          const double x = at.primal[i * n_ + j], z = y(i, j) - shift;
          first += x * z;
          rest += x * exp_remainder(z);
        }
      return eta * (std::log1p(first + rest) - first);
    } else {
      double acc = 0.0;
      for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j) acc += at.primal[i * n_ + j] * exp_remainder(y(i, j));
      return eta * acc;
    }
  }

  double value(const Vector& lambda) const {
    LogSumExpAccumulator acc;
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) acc.add(logit(lambda, i, j));
    if constexpr (Normalize) {
      return inst_.eta() * acc.value() - linear(lambda);
    } else {
      const double scaled = acc.value() + std::log(inst_.eta());
      if (scaled > kMaxExpArgument) return std::numeric_limits<double>::infinity();
      return std::exp(scaled) - linear(lambda);
    }
  }

 private:
  /// e^z - 1 - z without cancellation near zero.
  static double exp_remainder(double z) {
    if (std::abs(z) < 1e-3) return 0.5 * z * z * (1.0 + z / 3.0 * (1.0 + z / 4.0 * (1.0 + z / 5.0)));
    return std::expm1(z) - z;
  }

  double logit(const Vector& lambda, std::size_t i, std::size_t j) const {
    return (lambda[i] + lambda[n_ + j] - inst_.cost()(i, j)) / inst_.eta() - 1.0;
  }

  /// Writes logits into out and returns their log-sum-exp.
  double logits(const Vector& lambda, Vector& out) const {
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) {
        out[i * n_ + j] = logit(lambda, i, j);
        top = std::max(top, out[i * n_ + j]);
      }
    double acc = 0.0;
    for (double x : out) acc += std::exp(x - top);
    return top + std::log(acc);
  }

  double linear(const Vector& lambda) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < n_; ++i)
      acc += lambda[i] * inst_.r()[i] + lambda[n_ + i] * inst_.c()[i];
    return acc;
  }

  const RegularizedInstance& inst_;
  std::size_t n_;
};

}  // namespace detail

/// semi_dual_phi with the softmax primal.
using LogSumExpDual = detail::FusedDual<true>;
/// exp_dual_phi with the unnormalized exponential primal.
using ExpSumDual = detail::FusedDual<false>;

/// Quadratic mirror map phi(z) = ||z||^2 / (2 delta), which is
/// (1/delta)-strongly convex with respect to l_inf on R^{2n} for delta = n.
/// The line search measures steps in l_inf.
struct MirrorMap {
  double delta = 1.0;

  static MirrorMap scaled_euclidean(std::size_t n) { return {static_cast<double>(n)}; }

  void prox(Vector& z, const Vector& g, double step) const {
    for (std::size_t k = 0; k < z.size(); ++k) z[k] -= delta * step * g[k];
  }
  static double norm_sq(const Vector& d) {
    double m = 0.0;
    for (double x : d) m = std::max(m, std::abs(x));
    return m * m;
  }
  static constexpr bool kLinfAnalysis = true;
};

/// Plain gradient geometry: delta = 1, Bregman ||.||_2^2 / 2, l2 line search.
struct EuclideanGeometry {
  double delta = 1.0;

  void prox(Vector& z, const Vector& g, double step) const {
    for (std::size_t k = 0; k < z.size(); ++k) z[k] -= step * g[k];
  }
  static double norm_sq(const Vector& d) {
    double s = 0.0;
    for (double x : d) s += x * x;
    return s;
  }
  static constexpr bool kLinfAnalysis = false;
};

struct AcceleratedRun {
  TransportPlan plan;      ///< averaged primal
  DualPotentials lambda;   ///< final (alpha, beta)
  SolverTrace trace;
};

/// alpha = (1 + sqrt(1 + 4 delta M abar)) / (2 delta M).
inline double accelerated_stepsize(double delta, double curvature, double accumulated) {
  return (1.0 + std::sqrt(1.0 + 4.0 * delta * curvature * accumulated)) /
         (2.0 * delta * curvature);
}

/// Upper bound on cumulative gradient-oracle calls after t outer iterations
/// with initial curvature guess L0 and ||A||_{1->1} = 2.
inline double oracle_call_bound(std::size_t t, double eta, double initial_curvature = 1.0) {
  const double a2 = ConstraintOperator::norm_1to1() * ConstraintOperator::norm_1to1();
  return 4.0 * static_cast<double>(t) + 4.0 +
         (2.0 * std::log(a2 / (2.0 * eta)) - 2.0 * std::log(initial_curvature)) / std::log(2.0);
}

/// Lower bound eta (t+1)^2 / (8 delta ||A||^2) on the accumulator after t >= 1
/// iterations.
inline double accumulator_lower_bound(std::size_t t, double eta, double delta) {
  const double a2 = ConstraintOperator::norm_1to1() * ConstraintOperator::norm_1to1();
  const double tp1 = static_cast<double>(t + 1);
  return eta * tp1 * tp1 / (8.0 * delta * a2);
}

/// Outer-iteration bound 1 + 4 sqrt(2) ||A|| sqrt(delta (R + 1/2) / eps').
inline double accelerated_iteration_bound(double delta, double R, double eps_prime) {
  return 1.0 + 4.0 * std::sqrt(2.0) * ConstraintOperator::norm_1to1() *
                   std::sqrt(delta * (R + 0.5) / eps_prime);
}

template <class Objective, class Geometry>
AcceleratedRun accelerated_primal_dual(const Objective& objective, const Geometry& geometry,
                                       const ConstraintOperator& constraints, double eps_prime,
                                       const SolverOptions& options = {}) {
  const std::size_t n = objective.atoms();
  if (constraints.atoms() != n) throw DomainError("constraint operator dimension mismatch");
  if (!(geometry.delta > 0.0)) throw DomainError("geometry delta must be positive");
  const std::size_t max_iter = options.max_iter ? options.max_iter : kDefaultAcceleratedMaxIter;
  const double eta = objective.instance().eta();
  const double delta = geometry.delta;
  constexpr double kInitialCurvature = 1.0;

  detail::Stopwatch clock;
  AcceleratedRun run;
  SolverTrace& trace = run.trace;

  Vector z(2 * n, 0.0), lambda(2 * n, 0.0), mu(2 * n), z_next(2 * n), lambda_next(2 * n),
      diff(2 * n);
  Vector x_avg(n * n, 0.0);
  double accumulated = 0.0;
  double curvature_guess = kInitialCurvature;
  std::uint64_t grad_calls = 0;

  {
    IterationRecord rec;
    rec.residual = constraints.residual_l1(x_avg);
    rec.dual_value = objective.value(lambda);
    trace.records.push_back(rec);
  }

  std::size_t t = 0;
  trace.status = SolverStatus::MaxIterations;
  while (true) {
    if (t >= max_iter) break;
    if (options.max_seconds > 0.0 && clock.seconds() > options.max_seconds) {
      trace.message = "time budget exhausted";
      break;
    }
    double M = curvature_guess / 2.0;
    double step = 0.0, accumulated_next = 0.0, phi_next = 0.0;
    int doublings = 0;
    DualEvaluation at_mu;
    bool accepted = false;
    while (doublings < kMaxLineSearchDoublings) {
      M *= 2.0;
      ++doublings;
      step = accelerated_stepsize(delta, M, accumulated);
      accumulated_next = accumulated + step;
      for (std::size_t k = 0; k < 2 * n; ++k)
        mu[k] = (step * z[k] + accumulated * lambda[k]) / accumulated_next;
      at_mu = objective.evaluate(mu);
      ++grad_calls;
      z_next = z;
      geometry.prox(z_next, at_mu.gradient, step);
      for (std::size_t k = 0; k < 2 * n; ++k) {
        lambda_next[k] = (step * z_next[k] + accumulated * lambda[k]) / accumulated_next;
        diff[k] = lambda_next[k] - mu[k];
      }
      phi_next = objective.value(lambda_next);
      ++grad_calls;
      if (!std::isfinite(at_mu.value) || !std::isfinite(phi_next)) continue;
      const double gap = objective.bregman_gap(at_mu, diff);
      if (gap <= 0.5 * M * Geometry::norm_sq(diff)) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      trace.status = SolverStatus::NumericalFailure;
      trace.message = "line search exceeded " + std::to_string(kMaxLineSearchDoublings) +
                      " doublings at iteration " + std::to_string(t + 1);
      break;
    }

    for (std::size_t k = 0; k < x_avg.size(); ++k)
      x_avg[k] = (step * at_mu.primal[k] + accumulated * x_avg[k]) / accumulated_next;
    z.swap(z_next);
    lambda.swap(lambda_next);
    accumulated = accumulated_next;
    curvature_guess = M / 2.0;
    ++t;

    const double residual = constraints.residual_l1(x_avg);
    if (options.check_invariants) {
      const double identity = delta * M * step * step;
      if (std::abs(identity - accumulated) > 1e-12 * accumulated)
        throw InvariantViolation("stepsize identity delta M alpha^2 = abar violated at iteration " +
                                 std::to_string(t));
      if constexpr (Geometry::kLinfAnalysis) {
        if (grad_calls > oracle_call_bound(t, eta, kInitialCurvature))
          throw InvariantViolation("gradient-oracle calls exceed their bound at iteration " +
                                   std::to_string(t));
        if (accumulated < accumulator_lower_bound(t, eta, delta))
          throw InvariantViolation("accumulator below its lower bound at iteration " +
                                   std::to_string(t));
      }
    }
    if (detail::keep_record(t, options.record_stride) || residual <= eps_prime) {
      IterationRecord rec;
      rec.iter = t;
      rec.residual = residual;
      rec.dual_value = phi_next;
      rec.line_search_doublings = doublings;
      rec.grad_calls = grad_calls;
      rec.elapsed = clock.seconds();
      rec.curvature = M;
      rec.step = step;
      rec.accumulated = accumulated;
      trace.records.push_back(rec);
    }
    if (options.observer) options.observer(t, DualPotentials::from_stacked(lambda));
    if (residual <= eps_prime) {
      trace.status = SolverStatus::Converged;
      break;
    }
  }
  if (trace.records.back().iter != t) {
    IterationRecord rec = trace.records.back();
    rec.iter = t;
    rec.residual = constraints.residual_l1(x_avg);
    rec.grad_calls = grad_calls;
    rec.elapsed = clock.seconds();
    trace.records.push_back(rec);
  }
  trace.iterations = t;
  run.plan = TransportPlan(Matrix(n, n, std::move(x_avg)));
  run.lambda = DualPotentials::from_stacked(lambda);
  return run;
}

/// APDAMD on the log-sum-exp dual of `inst`; constraints carry b = (r; c).
inline AcceleratedRun apdamd(const RegularizedInstance& inst, const ConstraintOperator& constraints,
                             const MirrorMap& mirror, double eps_prime,
                             const SolverOptions& options = {}) {
  if (!inst.strictly_positive_marginals())
    throw DomainError("apdamd requires strictly positive marginals");
  return accelerated_primal_dual(LogSumExpDual(inst), mirror, constraints, eps_prime, options);
}

/// APDAGD baseline: the same loop on the exponential-sum dual in Euclidean
/// geometry.
inline AcceleratedRun apdagd(const RegularizedInstance& inst, const ConstraintOperator& constraints,
                             double eps_prime, const SolverOptions& options = {}) {
  if (!inst.strictly_positive_marginals())
    throw DomainError("apdagd requires strictly positive marginals");
  return accelerated_primal_dual(ExpSumDual(inst), EuclideanGeometry{}, constraints, eps_prime,
                                 options);
}

}  // namespace eot
