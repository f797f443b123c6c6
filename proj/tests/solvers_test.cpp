#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "eot/core/dual.hpp"
#include "eot/core/primal.hpp"
#include "eot/instances/instance_spec.hpp"
#include "eot/oracle/exact.hpp"
#include "eot/solvers/approx.hpp"
#include "test_support.hpp"

namespace eot {
namespace {

using test::e2;
using test::random_instance;

constexpr double kE2OptDiag = 0.36552928931500244;
constexpr double kE2OptOff = 0.13447071068499756;
constexpr double kGreenkhornFirstV = -1.0064088680781681;

SolverOptions checked() {
  SolverOptions o;
  o.check_invariants = true;
  return o;
}

double l1(const TransportPlan& a, const TransportPlan& b) {
  return l1_distance(a.entries().flat(), b.entries().flat());
}

TEST(Sinkhorn, ConvergesToSymmetricOptimum) {
  const ScalingRun run = sinkhorn(e2(), 1e-10, checked());
  EXPECT_EQ(run.trace.status, SolverStatus::Converged);
  const TransportPlan X = scaling_matrix(run.potentials, e2());
  EXPECT_NEAR(X(0, 0), kE2OptDiag, 1e-9);
  EXPECT_NEAR(X(0, 1), kE2OptOff, 1e-9);
  EXPECT_LE(residual_E(run.potentials, e2()), 1e-10);
}

TEST(Sinkhorn, RowSweepMatchesRowsExactly) {
  std::mt19937_64 rng(2);
  const auto inst = random_instance(6, 0.3, rng);
  SolverOptions o;
  o.max_iter = 3;
  o.observer = [&](std::size_t iter, const DualPotentials& p) {
    const MarginalResiduals g = grad_f(p, inst);
    const Vector& swept = iter % 2 == 1 ? g.row : g.col;
    for (double x : swept) EXPECT_NEAR(x, 0.0, 1e-15);
  };
  sinkhorn(inst, 0.0, o);
}

TEST(Sinkhorn, ConstantCostOneSweep) {
  const RegularizedInstance inst(CostMatrix(Matrix(5, 5, 1.0)), Histogram::uniform(5), Histogram::uniform(5), 0.2);
  const ScalingRun run = sinkhorn(inst, 1e-12);
  EXPECT_EQ(run.trace.iterations, 1u);
  const TransportPlan plan = scaling_matrix(run.potentials, inst);
  for (double x : plan.entries().flat()) EXPECT_NEAR(x, 0.04, 1e-15);
}

TEST(Sinkhorn, MaxIterations) {
  std::mt19937_64 rng(1);
  SolverOptions o;
  o.max_iter = 2;
  const ScalingRun run = sinkhorn(random_instance(5, 0.05, rng), 1e-14, o);
  EXPECT_EQ(run.trace.status, SolverStatus::MaxIterations);
  EXPECT_EQ(run.trace.iterations, 2u);
}

TEST(Sinkhorn, RejectsZeroMarginal) {
  const RegularizedInstance inst(CostMatrix(Matrix(2, 2, 1.0)), Histogram({1.0, 0.0}), Histogram::uniform(2), 1.0);
  EXPECT_THROW(sinkhorn(inst, 1e-6), DomainError);
  EXPECT_THROW(greenkhorn(inst, 1e-6), DomainError);
  EXPECT_THROW(apdamd(inst, ConstraintOperator(inst.r(), inst.c()), MirrorMap::scaled_euclidean(2), 1e-6),
               DomainError);
}

TEST(Greenkhorn, FirstIterationTieGoesToColumn) {
  SolverOptions o;
  o.max_iter = 1;
  const ScalingRun run = greenkhorn(e2(), 0.0, o);
  EXPECT_EQ(run.trace.iterations, 1u);
  EXPECT_EQ(run.potentials.u[0], 0.0);
  EXPECT_EQ(run.potentials.u[1], 0.0);
  EXPECT_NEAR(run.potentials.v[0], kGreenkhornFirstV, 1e-15);
  EXPECT_EQ(run.potentials.v[1], 0.0);
}

TEST(Greenkhorn, UpdatedLineMatchesItsMarginal) {
  std::mt19937_64 rng(6);
  const auto inst = random_instance(7, 0.2, rng);
  DualPotentials prev = DualPotentials::zeros(7);
  SolverOptions o;
  o.max_iter = 40;
  o.observer = [&](std::size_t, const DualPotentials& p) {
    const MarginalResiduals g = grad_f(p, inst);
    for (std::size_t k = 0; k < 7; ++k) {
      if (p.u[k] != prev.u[k]) {
        EXPECT_NEAR(g.row[k], 0.0, 1e-15);
      }
      if (p.v[k] != prev.v[k]) {
        EXPECT_NEAR(g.col[k], 0.0, 1e-15);
      }
    }
    prev = p;
  };
  greenkhorn(inst, 0.0, o);
}

TEST(Greenkhorn, CachedTraceMatchesFreshEvaluation) {
  std::mt19937_64 rng(9);
  const auto inst = random_instance(12, 0.1, rng);
  std::vector<std::pair<double, double>> fresh = {
      {dual_f(DualPotentials::zeros(12), inst), residual_E(DualPotentials::zeros(12), inst)}};
  SolverOptions o;
  o.max_iter = 2000;
  o.observer = [&](std::size_t, const DualPotentials& p) {
    fresh.emplace_back(dual_f(p, inst), residual_E(p, inst));
  };
  const ScalingRun run = greenkhorn(inst, 1e-8, o);
  ASSERT_EQ(run.trace.records.size(), fresh.size());
  for (std::size_t k = 0; k < fresh.size(); ++k) {
    EXPECT_NEAR(run.trace.records[k].dual_value, fresh[k].first, 1e-10);
    EXPECT_NEAR(run.trace.records[k].residual, fresh[k].second, 1e-10);
  }
}

TEST(Greenkhorn, SameLimitAsSinkhorn) {
  const ScalingRun g = greenkhorn(e2(), 1e-6);
  EXPECT_EQ(g.trace.status, SolverStatus::Converged);
  const ScalingRun s = sinkhorn(e2(), 1e-6);
  EXPECT_LE(l1(scaling_matrix(g.potentials, e2()), scaling_matrix(s.potentials, e2())), 1e-5);
}

TEST(Greenkhorn, IterationBound) {
  std::mt19937_64 rng(12);
  for (double eta : {0.05, 0.2, 1.0}) {
    const auto inst = random_instance(8, eta, rng);
    const double eps_prime = 1e-3;
    const ScalingRun run = greenkhorn(inst, eps_prime);
    EXPECT_EQ(run.trace.status, SolverStatus::Converged);
    EXPECT_LE(static_cast<double>(run.trace.iterations), 2 + 112 * 8 * bound_R(inst) / eps_prime);
  }
}

TEST(Greenkhorn, DecreaseBoundAtUnitMass) {
  // Marginals and a start whose kernel mass is close to one: every step
  // satisfies the per-iteration decrease bound.
  const std::size_t n = 6;
  const RegularizedInstance inst(CostMatrix(Matrix(n, n, 1.0)), Histogram::normalized({1, 2, 3, 4, 5, 6}),
                                 Histogram::normalized({6, 5, 4, 3, 2, 1}), 0.5 / std::log(6.0));
  SolverOptions o = checked();
  const ScalingRun run = greenkhorn(inst, 1e-9, o);
  EXPECT_EQ(run.trace.status, SolverStatus::Converged);
  EXPECT_TRUE(run.trace.violations.empty());
}

TEST(Accelerated, StepsizeExamples) {
  EXPECT_DOUBLE_EQ(accelerated_stepsize(1, 1, 0), 1.0);
  const double a = accelerated_stepsize(2, 1, 2);
  EXPECT_NEAR(a, 1.2807764064044151, 1e-15);
  EXPECT_NEAR(2 * 1 * a * a, 2 + a, 1e-14);
}

TEST(Accelerated, MirrorMapProx) {
  const MirrorMap m = MirrorMap::scaled_euclidean(4);
  EXPECT_EQ(m.delta, 4.0);
  Vector z = {1, 2}, g = {0.5, -1};
  m.prox(z, g, 0.25);
  EXPECT_DOUBLE_EQ(z[0], 0.5);
  EXPECT_DOUBLE_EQ(z[1], 3.0);
  EXPECT_DOUBLE_EQ(MirrorMap::norm_sq({1, -3, 2}), 9.0);
  EXPECT_DOUBLE_EQ(EuclideanGeometry::norm_sq({1, -3, 2}), 14.0);
}

TEST(Apdamd, ConstantCostStopsAfterFirstAverage) {
  const RegularizedInstance inst(CostMatrix(Matrix(4, 4, 1.0)), Histogram::uniform(4), Histogram::uniform(4), 0.3);
  const AcceleratedRun run =
      apdamd(inst, ConstraintOperator(inst.r(), inst.c()), MirrorMap::scaled_euclidean(4), 1e-12, checked());
  EXPECT_EQ(run.trace.status, SolverStatus::Converged);
  EXPECT_EQ(run.trace.iterations, 1u);
  for (double x : run.plan.entries().flat()) EXPECT_NEAR(x, 1.0 / 16, 1e-15);
}

template <class Dual>
void check_bregman_gap(const Dual& dual, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const std::size_t m = 2 * dual.atoms();
  for (int trial = 0; trial < 20; ++trial) {
    Vector lambda(m), d(m), moved(m);
    for (std::size_t k = 0; k < m; ++k) {
      lambda[k] = U(rng);
      d[k] = 0.3 * U(rng);
      moved[k] = lambda[k] + d[k];
    }
    const DualEvaluation at = dual.evaluate(lambda);
    const double direct = dual.value(moved) - at.value - dot(at.gradient, d);
    EXPECT_NEAR(dual.bregman_gap(at, d), direct, 1e-12 * (1.0 + std::abs(at.value)));
    EXPECT_GE(dual.bregman_gap(at, d), 0.0);
  }
  const DualEvaluation at = dual.evaluate(Vector(m, 0.1));
  EXPECT_EQ(dual.bregman_gap(at, Vector(m, 0.0)), 0.0);
  Vector tiny(m, 0.0);
  tiny[0] = 1e-9;
  EXPECT_GT(dual.bregman_gap(at, tiny), 0.0);
}

TEST(Accelerated, BregmanGapMatchesDirectDifference) {
  std::mt19937_64 rng(21);
  for (double eta : {0.3, 1.0}) {
    const auto inst = random_instance(5, eta, rng);
    check_bregman_gap(LogSumExpDual(inst), rng);
    check_bregman_gap(ExpSumDual(inst), rng);
  }
}

TEST(Apdamd, InvariantsHoldOnRandomInstances) {
  std::mt19937_64 rng(14);
  for (double eta : {0.1, 0.5}) {
    const auto inst = random_instance(6, eta, rng);
    const AcceleratedRun run =
        apdamd(inst, ConstraintOperator(inst.r(), inst.c()), MirrorMap::scaled_euclidean(6), 1e-6, checked());
    EXPECT_EQ(run.trace.status, SolverStatus::Converged);
    for (const auto& rec : run.trace.records) {
      if (rec.iter == 0) continue;
      EXPECT_NEAR(6 * rec.curvature * rec.step * rec.step, rec.accumulated, 1e-12 * rec.accumulated);
      EXPECT_GE(rec.accumulated, accumulator_lower_bound(rec.iter, eta, 6));
      EXPECT_LE(static_cast<double>(rec.grad_calls), oracle_call_bound(rec.iter, eta));
    }
    EXPECT_LE(static_cast<double>(run.trace.iterations),
              accelerated_iteration_bound(6, bound_R(inst), 1e-6));
  }
}

TEST(Apdagd, ConvergesOnE2) {
  const AcceleratedRun run = apdagd(e2(), ConstraintOperator(e2().r(), e2().c()), 1e-7, checked());
  EXPECT_EQ(run.trace.status, SolverStatus::Converged);
  EXPECT_NEAR(run.plan(0, 0), kE2OptDiag, 1e-5);
  EXPECT_NEAR(run.plan(1, 0), kE2OptOff, 1e-5);
}

TEST(Solvers, AgreeOnRandomInstance) {
  std::mt19937_64 rng(17);
  const auto inst = random_instance(5, 0.25, rng);
  const TransportPlan ref = scaling_matrix(sinkhorn(inst, 1e-12).potentials, inst);
  for (Method m : kAllMethods) {
    const SolverRun run = run_solver(m, inst, 1e-7);
    EXPECT_EQ(run.trace.status, SolverStatus::Converged) << to_string(m);
    EXPECT_LE(l1(run.plan, ref), 1e-4) << to_string(m);
  }
}

TEST(Methods, ParseAndUpdates) {
  for (Method m : kAllMethods) EXPECT_EQ(parse_method(to_string(m)), m);
  EXPECT_THROW(parse_method("newton"), DomainError);
  EXPECT_EQ(row_col_updates(Method::Greenkhorn, 10, 4), 10u);
  EXPECT_EQ(row_col_updates(Method::Sinkhorn, 10, 4), 40u);
}

TEST(ApproxOt, FeasibleAndWithinEps) {
  for (std::uint64_t seed : {1u, 2u}) {
    const Instance inst = materialize(InstanceSpec{SyntheticPair{4, 0.5, seed}});
    const double opt = exact_ot(inst.cost, inst.r, inst.c).value;
    for (Method m : kAllMethods) {
      const ApproxResult res = approx_ot(inst.cost, inst.r, inst.c, 0.5, m);
      EXPECT_TRUE(res.plan.feasible_for(inst.r, inst.c)) << to_string(m);
      EXPECT_LE(res.cost - opt, 0.5 + 1e-9) << to_string(m);
      EXPECT_GE(res.cost - opt, -1e-9) << to_string(m);
      EXPECT_LE(res.trace.final_residual(), res.schedule.eps_prime / 2);
    }
  }
}

TEST(ApproxOt, EtaOverride) {
  const Instance inst = uniform_instance(3);
  ApproxOptions o;
  o.eta_override = 2.0;
  const ApproxResult res = approx_ot(inst.cost, inst.r, inst.c, 0.5, Method::Sinkhorn, o);
  EXPECT_EQ(res.schedule.eta, 2.0);
  EXPECT_NEAR(res.cost, 1.0, 1e-12);
}

}  // namespace
}  // namespace eot
