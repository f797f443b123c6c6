#pragma once

#include <cmath>
#include <cstddef>
#include <utility>

#include "eot/core/dual.hpp"
#include "eot/core/logsumexp.hpp"
#include "eot/core/types.hpp"
#include "eot/solvers/trace.hpp"

namespace eot {

/// Final potentials of a scaling solver together with its trace.
struct ScalingRun {
  DualPotentials potentials;
  SolverTrace trace;
};

/// Alternating full row / column projections in the log domain. One
/// iteration is one sweep over all rows or all columns; odd iterations
/// update u, even ones update v.
inline ScalingRun sinkhorn(const RegularizedInstance& inst, double eps_prime,
                           const SolverOptions& options = {}) {
  if (!inst.strictly_positive_marginals())
    throw DomainError("sinkhorn requires strictly positive marginals");
  const std::size_t n = inst.size();
  const std::size_t max_iter = options.max_iter ? options.max_iter : kDefaultScalingMaxIter;
  const auto& r = inst.r().weights();
  const auto& c = inst.c().weights();

  detail::Stopwatch clock;
  ScalingRun run{DualPotentials::zeros(n), {}};
  DualPotentials& pots = run.potentials;
  SolverTrace& trace = run.trace;

  auto record = [&](std::size_t iter, double residual, double mass, bool force) {
    if (!force && !detail::keep_record(iter, options.record_stride)) return;
    IterationRecord rec;
    rec.iter = iter;
    rec.residual = residual;
    rec.dual_value = mass - dot(pots.u, r) - dot(pots.v, c);
    rec.elapsed = clock.seconds();
    trace.records.push_back(rec);
  };

  double residual = 0.0;
  double mass = 0.0;
  {
    const MarginalResiduals g = grad_f(pots, inst);
    for (std::size_t i = 0; i < n; ++i) {
      residual += std::abs(g.row[i]) + std::abs(g.col[i]);
      mass += g.row[i] + r[i];
    }
  }
  record(0, residual, mass, true);

  Vector terms(n);
  std::size_t iter = 0;
  trace.status = SolverStatus::MaxIterations;
  while (true) {
    if (residual <= eps_prime) {
      trace.status = SolverStatus::Converged;
      break;
    }
    if (iter >= max_iter) break;
    if (options.max_seconds > 0.0 && clock.seconds() > options.max_seconds) {
      trace.message = "time budget exhausted";
      break;
    }
    ++iter;
    const bool rows = iter % 2 == 1;
    Vector& target = rows ? pots.u : pots.v;
    const Vector& marg = rows ? r : c;
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b)
        terms[b] = rows ? log_scaling_entry(pots, inst, a, b) : log_scaling_entry(pots, inst, b, a);
      target[a] += std::log(marg[a]) - logsumexp(terms);
    }
    // The swept marginal is matched exactly; only the other one is off.
    const Vector other = rows ? log_col_sums(pots, inst) : log_row_sums(pots, inst);
    const Vector& other_marg = rows ? c : r;
    residual = 0.0;
    mass = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
      const double s = detail::exp_of_log_sum(other[b], "sinkhorn");
      residual += std::abs(s - other_marg[b]);
      mass += s;
    }
    if (!pots.all_finite()) {
      trace.status = SolverStatus::NumericalFailure;
      trace.message = "non-finite potentials";
      break;
    }
    record(iter, residual, mass, false);
    if (options.observer) options.observer(iter, pots);
  }
  if (trace.records.back().iter != iter) record(iter, residual, mass, true);
  trace.iterations = iter;
  return run;
}

}  // namespace eot
