#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "eot/core/dual.hpp"
#include "eot/core/primal.hpp"
#include "eot/core/types.hpp"
#include "eot/solvers/accelerated.hpp"
#include "eot/solvers/greenkhorn.hpp"
#include "eot/solvers/sinkhorn.hpp"
#include "eot/solvers/trace.hpp"

namespace eot {

enum class Method { Sinkhorn, Greenkhorn, Apdamd, Apdagd };

inline constexpr std::array<Method, 4> kAllMethods = {Method::Sinkhorn, Method::Greenkhorn,
                                                      Method::Apdamd, Method::Apdagd};

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::Sinkhorn: return "sinkhorn";
    case Method::Greenkhorn: return "greenkhorn";
    case Method::Apdamd: return "apdamd";
    case Method::Apdagd: return "apdagd";
  }
  return "unknown";
}

inline Method parse_method(std::string_view name) {
  for (Method m : kAllMethods)
    if (to_string(m) == name) return m;
  throw DomainError("unknown method '" + std::string(name) +
                    "' (expected sinkhorn, greenkhorn, apdamd or apdagd)");
}

/// One row/column update is the unit of work shared by all solvers: a
/// Sinkhorn sweep or an accelerated iteration touches every one of the n
/// lines, a Greenkhorn step touches one.
inline std::size_t row_col_updates(Method m, std::size_t iterations, std::size_t n) {
  return m == Method::Greenkhorn ? iterations : iterations * n;
}

/// Output of a single solver run on a regularized instance.
struct SolverRun {
  TransportPlan plan;                    ///< B(u,v) or the averaged primal
  std::optional<DualPotentials> potentials;  ///< (u, v) for scaling solvers
  std::optional<DualPotentials> lambda;      ///< (alpha, beta) for accelerated solvers
  SolverTrace trace;
};

/// Runs `method` on `inst` until its residual is at most `tolerance`.
inline SolverRun run_solver(Method method, const RegularizedInstance& inst, double tolerance,
                            const SolverOptions& options = {}) {
  SolverRun out;
  switch (method) {
    case Method::Sinkhorn:
    case Method::Greenkhorn: {
      ScalingRun run = method == Method::Sinkhorn ? sinkhorn(inst, tolerance, options)
                                                  : greenkhorn(inst, tolerance, options);
      out.plan = scaling_matrix(run.potentials, inst);
      out.potentials = std::move(run.potentials);
      out.trace = std::move(run.trace);
      break;
    }
    case Method::Apdamd:
    case Method::Apdagd: {
      const ConstraintOperator constraints(inst.r(), inst.c());
      AcceleratedRun run =
          method == Method::Apdamd
              ? apdamd(inst, constraints, MirrorMap::scaled_euclidean(inst.size()), tolerance,
                       options)
              : apdagd(inst, constraints, tolerance, options);
      out.plan = std::move(run.plan);
      out.lambda = std::move(run.lambda);
      out.trace = std::move(run.trace);
      break;
    }
  }
  return out;
}

struct ApproxResult {
  TransportPlan plan;      ///< rounded, feasible for the original marginals
  double cost = 0.0;       ///< <C, plan>
  SolverTrace trace;
  Schedule schedule;
  TransportPlan unrounded;  ///< solver output before rounding
  MarginalPair reweighted;
};

struct ApproxOptions {
  SolverOptions solver;
  /// Replaces eta = eps / (4 log n) when set; eps' still follows eps.
  std::optional<double> eta_override;
};

/// Reweight, solve to eps'/2 and round onto U(r, c). Guarantees a feasible
/// plan; <C, plan> <= OPT + eps holds under the default schedule.
inline ApproxResult approx_ot(const CostMatrix& C, const Histogram& r, const Histogram& c,
                              double eps, Method method, const ApproxOptions& options = {}) {
  if (r.size() != C.size() || c.size() != C.size())
    throw DomainError("approx_ot: marginal and cost dimensions disagree");
  Schedule schedule = schedule_eta_eps(eps, C.size(), C.max_abs());
  if (options.eta_override) schedule.eta = *options.eta_override;
  MarginalPair tilde = reweight_marginals(r, c, schedule.eps_prime);
  const RegularizedInstance inst(C, tilde.r, tilde.c, schedule.eta);
  SolverRun run = run_solver(method, inst, schedule.eps_prime / 2.0, options.solver);
  if (run.trace.status == SolverStatus::NumericalFailure)
    throw NumericalFailure(std::string(to_string(method)) + ": " + run.trace.message);

  ApproxResult out;
  out.plan = round_to_polytope(run.plan, r, c);
  out.cost = out.plan.cost(C);
  out.trace = std::move(run.trace);
  out.schedule = schedule;
  out.unrounded = std::move(run.plan);
  out.reweighted = std::move(tilde);
  return out;
}

}  // namespace eot
