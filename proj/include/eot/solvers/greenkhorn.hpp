#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>

#include "eot/core/dual.hpp"
#include "eot/core/logsumexp.hpp"
#include "eot/core/types.hpp"
#include "eot/solvers/sinkhorn.hpp"
#include "eot/solvers/trace.hpp"

namespace eot {

namespace detail {

/// Greedy gain with the cached marginal; an empty (underflowed) line has
/// unbounded gain.
inline double cached_gain(double target, double current) {
  if (!(current > 0.0)) return std::numeric_limits<double>::infinity();
  return gain_rho(target, current);
}

/// First index of the largest gain.
inline std::size_t argmax_gain(const Vector& target, const Vector& current, double& best) {
  std::size_t arg = 0;
  best = -1.0;
  for (std::size_t k = 0; k < target.size(); ++k) {
    const double g = cached_gain(target[k], current[k]);
    if (g > best) {
      best = g;
      arg = k;
    }
  }
  return arg;
}

}  // namespace detail

/// Greedy single-coordinate scaling. Each iteration updates the row or column
/// with the largest gain rho; ties between the best row and the best column
/// go to the column. Row and column sums of B are cached and updated in O(n)
/// per iteration; they are rebuilt from scratch every 8n iterations and
/// before accepting convergence.
inline ScalingRun greenkhorn(const RegularizedInstance& inst, double eps_prime,
                             const SolverOptions& options = {}) {
  if (!inst.strictly_positive_marginals())
    throw DomainError("greenkhorn requires strictly positive marginals");
  const std::size_t n = inst.size();
  const std::size_t max_iter = options.max_iter ? options.max_iter : kDefaultScalingMaxIter;
  const std::size_t refresh_every = 8 * n;
  const auto& r = inst.r().weights();
  const auto& c = inst.c().weights();

  detail::Stopwatch clock;
  ScalingRun run{DualPotentials::zeros(n), {}};
  DualPotentials& pots = run.potentials;
  SolverTrace& trace = run.trace;

  Vector row_sum(n), col_sum(n);
  auto refresh = [&] {
    const Vector lr = log_row_sums(pots, inst);
    const Vector lc = log_col_sums(pots, inst);
    for (std::size_t k = 0; k < n; ++k) {
      row_sum[k] = detail::exp_of_log_sum(lr[k], "greenkhorn");
      col_sum[k] = detail::exp_of_log_sum(lc[k], "greenkhorn");
    }
  };
  auto residual_now = [&] { return l1_distance(row_sum, r) + l1_distance(col_sum, c); };
  double u_dot_r = 0.0, v_dot_c = 0.0;
  auto dual_now = [&] {
    double mass = 0.0;
    for (double s : row_sum) mass += s;
    return mass - u_dot_r - v_dot_c;
  };
  auto record = [&](std::size_t iter, double residual, double dual, bool force) {
    if (!force && !detail::keep_record(iter, options.record_stride)) return;
    IterationRecord rec;
    rec.iter = iter;
    rec.residual = residual;
    rec.dual_value = dual;
    rec.elapsed = clock.seconds();
    trace.records.push_back(rec);
  };

  refresh();
  double residual = residual_now();
  double dual = dual_now();
  record(0, residual, dual, true);

  Vector terms(n), old_entries(n);
  std::size_t iter = 0;
  trace.status = SolverStatus::MaxIterations;
  while (true) {
    if (residual <= eps_prime) {
      refresh();
      residual = residual_now();
      dual = dual_now();
      if (residual <= eps_prime) {
        trace.status = SolverStatus::Converged;
        break;
      }
    }
    if (iter >= max_iter) break;
    if (options.max_seconds > 0.0 && clock.seconds() > options.max_seconds) {
      trace.message = "time budget exhausted";
      break;
    }

    double row_gain = 0.0, col_gain = 0.0;
    const std::size_t I = detail::argmax_gain(r, row_sum, row_gain);
    const std::size_t J = detail::argmax_gain(c, col_sum, col_gain);
    const bool update_row = row_gain > col_gain;
    const std::size_t k = update_row ? I : J;

    for (std::size_t m = 0; m < n; ++m) {
      terms[m] = update_row ? log_scaling_entry(pots, inst, k, m)
                            : log_scaling_entry(pots, inst, m, k);
      old_entries[m] = std::exp(terms[m]);
    }
    const double target = update_row ? r[k] : c[k];
    const double step = std::log(target) - logsumexp(terms);
    if (!std::isfinite(step)) {
      trace.status = SolverStatus::NumericalFailure;
      trace.message = "non-finite coordinate step";
      break;
    }
    Vector& other_sum = update_row ? col_sum : row_sum;
    for (std::size_t m = 0; m < n; ++m) {
      const double fresh = std::exp(terms[m] + step);
      other_sum[m] = std::max(0.0, other_sum[m] + (fresh - old_entries[m]));
    }
    if (update_row) {
      pots.u[k] += step;
      row_sum[k] = target;
      u_dot_r += step * target;
    } else {
      pots.v[k] += step;
      col_sum[k] = target;
      v_dot_c += step * target;
    }
    ++iter;
    if (iter % refresh_every == 0) refresh();

    const double prev_residual = residual;
    const double prev_dual = dual;
    residual = residual_now();
    dual = dual_now();
    // The decrease bound assumes iterates of mass about one; from the
    // unnormalized start it can fail, so violations are reported.
    if (options.check_invariants) {
      const double required = prev_residual * prev_residual / (28.0 * static_cast<double>(n));
      if (prev_dual - dual < required - 1e-9) trace.violations.push_back(iter);
    }
    record(iter, residual, dual, false);
    if (options.observer) options.observer(iter, pots);
  }
  if (trace.records.back().iter == iter) {
    trace.records.back().residual = residual;
    trace.records.back().dual_value = dual;
  } else {
    record(iter, residual, dual, true);
  }
  trace.iterations = iter;
  return run;
}

}  // namespace eot
