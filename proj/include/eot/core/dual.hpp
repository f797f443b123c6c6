#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <string>
#include <utility>

#include "eot/core/errors.hpp"
#include "eot/core/logsumexp.hpp"
#include "eot/core/types.hpp"

// Both dual objectives of entropic OT and the quantities derived from them.
//
// (u, v) side:  B(u,v)_ij = exp(u_i + v_j - C_ij / eta)
//               f(u,v)    = 1^T B 1 - <u, r> - <v, c>
// lambda side:  phi(a,b)  = eta * log sum_ij exp((a_i + b_j - C_ij) / eta - 1)
//                           - <a, r> - <b, c>
// Every sum of exponentials is evaluated in the log domain.

namespace eot {

namespace detail {

inline void check_dims(const DualPotentials& pots, const RegularizedInstance& inst) {
  if (pots.u.size() != inst.size() || pots.v.size() != inst.size())
    throw DomainError("potentials have length " + std::to_string(pots.u.size()) +
                      ", instance has " + std::to_string(inst.size()) + " atoms");
}

inline double checked_exp(double exponent, std::size_t i, std::size_t j) {
  const double value = std::exp(exponent);
  if (!std::isfinite(value)) {
    std::ostringstream msg;
    msg << "exponent " << exponent << " at (" << i << ", " << j << ") overflows";
    throw OverflowError(msg.str());
  }
  return value;
}

inline double exp_of_log_sum(double log_sum, const char* what) {
  if (log_sum > kMaxExpArgument)
    throw OverflowError(std::string(what) + ": log-sum " + std::to_string(log_sum) +
                        " overflows");
  return std::exp(log_sum);
}

/// Logit of the lambda-side primal: (a_i + b_j - C_ij) / eta - 1.
inline double lambda_logit(const DualPotentials& lambda, const RegularizedInstance& inst,
                           std::size_t i, std::size_t j) {
  return (lambda.u[i] + lambda.v[j] - inst.cost()(i, j)) / inst.eta() - 1.0;
}

}  // namespace detail

/// Log of B(u,v)_ij.
inline double log_scaling_entry(const DualPotentials& pots, const RegularizedInstance& inst,
                                std::size_t i, std::size_t j) {
  return pots.u[i] + pots.v[j] + inst.log_kernel(i, j);
}

inline TransportPlan scaling_matrix(const DualPotentials& pots,
                                   const RegularizedInstance& inst) {
  detail::check_dims(pots, inst);
  const std::size_t n = inst.size();
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      out(i, j) = detail::checked_exp(log_scaling_entry(pots, inst, i, j), i, j);
  return TransportPlan(std::move(out));
}

/// log r_i(B(u,v)) for every row.
inline Vector log_row_sums(const DualPotentials& pots, const RegularizedInstance& inst) {
  detail::check_dims(pots, inst);
  const std::size_t n = inst.size();
  Vector out(n);
  Vector terms(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) terms[j] = log_scaling_entry(pots, inst, i, j);
    out[i] = logsumexp(terms);
  }
  return out;
}

/// log c_j(B(u,v)) for every column.
inline Vector log_col_sums(const DualPotentials& pots, const RegularizedInstance& inst) {
  detail::check_dims(pots, inst);
  const std::size_t n = inst.size();
  Vector out(n);
  Vector terms(n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) terms[i] = log_scaling_entry(pots, inst, i, j);
    out[j] = logsumexp(terms);
  }
  return out;
}

inline double dual_f(const DualPotentials& pots, const RegularizedInstance& inst) {
  detail::check_dims(pots, inst);
  const std::size_t n = inst.size();
  LogSumExpAccumulator total;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) total.add(log_scaling_entry(pots, inst, i, j));
  const double mass = detail::exp_of_log_sum(total.value(), "dual_f");
  return mass - dot(pots.u, inst.r().weights()) - dot(pots.v, inst.c().weights());
}

struct MarginalResiduals {
  Vector row;  ///< B 1 - r
  Vector col;  ///< B^T 1 - c
};

inline MarginalResiduals grad_f(const DualPotentials& pots, const RegularizedInstance& inst) {
  const Vector lr = log_row_sums(pots, inst);
  const Vector lc = log_col_sums(pots, inst);
  MarginalResiduals out{Vector(inst.size()), Vector(inst.size())};
  for (std::size_t i = 0; i < inst.size(); ++i) {
    out.row[i] = detail::exp_of_log_sum(lr[i], "grad_f") - inst.r()[i];
    out.col[i] = detail::exp_of_log_sum(lc[i], "grad_f") - inst.c()[i];
  }
  return out;
}

/// E = ||r(B) - r||_1 + ||c(B) - c||_1.
inline double residual_E(const DualPotentials& pots, const RegularizedInstance& inst) {
  const MarginalResiduals g = grad_f(pots, inst);
  double acc = 0.0;
  for (double x : g.row) acc += std::abs(x);
  for (double x : g.col) acc += std::abs(x);
  return acc;
}

/// rho(a, b) = b - a + a log(a / b), with rho(0, b) = b.
inline double gain_rho(double a, double b) {
  if (!(b > 0.0)) throw DomainError("gain_rho requires b > 0");
  if (!(a >= 0.0)) throw DomainError("gain_rho requires a >= 0");
  if (a == 0.0) return b;
  return b - a + a * std::log(a / b);
}

/// Log-sum-exp dual phi(alpha, beta) without the additive constant.
inline double semi_dual_phi(const DualPotentials& lambda, const RegularizedInstance& inst) {
  detail::check_dims(lambda, inst);
  const std::size_t n = inst.size();
  LogSumExpAccumulator total;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) total.add(detail::lambda_logit(lambda, inst, i, j));
  return inst.eta() * total.value() - dot(lambda.u, inst.r().weights()) -
         dot(lambda.v, inst.c().weights());
}

/// Softmax plan x(lambda); entries sum to one.
inline TransportPlan primal_from_dual(const DualPotentials& lambda,
                                      const RegularizedInstance& inst) {
  detail::check_dims(lambda, inst);
  const std::size_t n = inst.size();
  Matrix logits(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) logits(i, j) = detail::lambda_logit(lambda, inst, i, j);
  const double norm = logsumexp(logits.flat());
  for (double& x : logits.flat()) x = std::exp(x - norm);
  return TransportPlan(std::move(logits));
}

/// Gradient of semi_dual_phi: A vec(x(lambda)) - b, stacked (rows; columns).
/// Its l1 norm is the marginal violation of x(lambda).
inline Vector grad_phi(const DualPotentials& lambda, const RegularizedInstance& inst,
                       const ConstraintOperator& constraints) {
  const TransportPlan x = primal_from_dual(lambda, inst);
  Vector out = constraints.apply(x.entries().flat());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] -= constraints.b()[k];
  return out;
}

/// Exponential-sum dual phi~(alpha, beta) = eta * sum_ij exp(logit_ij)
/// - <alpha, r> - <beta, c>. Returns +inf when the sum overflows.
inline double exp_dual_phi(const DualPotentials& lambda, const RegularizedInstance& inst) {
  detail::check_dims(lambda, inst);
  const std::size_t n = inst.size();
  LogSumExpAccumulator total;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) total.add(detail::lambda_logit(lambda, inst, i, j));
  const double log_mass = total.value() + std::log(inst.eta());
  if (log_mass > kMaxExpArgument) return std::numeric_limits<double>::infinity();
  return std::exp(log_mass) - dot(lambda.u, inst.r().weights()) -
         dot(lambda.v, inst.c().weights());
}

/// Unnormalized primal x~(lambda)_ij = exp(logit_ij).
inline TransportPlan exp_primal_from_dual(const DualPotentials& lambda,
                                          const RegularizedInstance& inst) {
  detail::check_dims(lambda, inst);
  const std::size_t n = inst.size();
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      out(i, j) = detail::checked_exp(detail::lambda_logit(lambda, inst, i, j), i, j);
  return TransportPlan(std::move(out));
}

/// Gradient of exp_dual_phi: A vec(x~(lambda)) - b.
inline Vector grad_exp_dual_phi(const DualPotentials& lambda, const RegularizedInstance& inst,
                                const ConstraintOperator& constraints) {
  const TransportPlan x = exp_primal_from_dual(lambda, inst);
  Vector out = constraints.apply(x.entries().flat());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] -= constraints.b()[k];
  return out;
}

}  // namespace eot
