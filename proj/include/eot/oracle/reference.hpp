#pragma once

#include <string>
#include <utility>

#include "eot/core/dual.hpp"
#include "eot/core/errors.hpp"
#include "eot/core/types.hpp"
#include "eot/solvers/sinkhorn.hpp"

namespace eot {

inline constexpr std::size_t kReferenceMaxSweeps = 10'000'000;

/// High-precision regularized dual optimum: Sinkhorn run until E <= tol.
/// Returns (u*, v*) and f(u*, v*).
inline std::pair<DualPotentials, double> reference_dual_optimum(const RegularizedInstance& inst,
                                                                double tol) {
  if (!(tol >= 1e-12)) throw DomainError("reference_dual_optimum requires tol >= 1e-12");
  SolverOptions options;
  options.max_iter = kReferenceMaxSweeps;
  options.record_stride = kReferenceMaxSweeps;
  ScalingRun run = sinkhorn(inst, tol, options);
  if (run.trace.status != SolverStatus::Converged)
    throw NumericalFailure("reference_dual_optimum: Sinkhorn stopped at E = " +
                           std::to_string(run.trace.final_residual()) + " (" +
                           std::string(to_string(run.trace.status)) + ")");
  const double value = dual_f(run.potentials, inst);
  return {std::move(run.potentials), value};
}

}  // namespace eot
