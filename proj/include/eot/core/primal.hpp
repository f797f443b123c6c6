#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>

#include "eot/core/errors.hpp"
#include "eot/core/types.hpp"

namespace eot {

/// <C, X> - eta * H(X) with H(X) = -sum X log X and 0 log 0 = 0.
/// eta = 0 is accepted and yields the plain transport cost.
inline double primal_objective(const TransportPlan& X, const CostMatrix& C, double eta) {
  if (X.size() != C.size()) throw DomainError("plan/cost dimension mismatch");
  double linear = 0.0;
  double neg_entropy = 0.0;
  const auto& x = X.entries().flat();
  const auto& c = C.entries().flat();
  for (std::size_t k = 0; k < x.size(); ++k) {
    linear += c[k] * x[k];
    if (x[k] > 0.0) neg_entropy += x[k] * std::log(x[k]);
  }
  return linear + (eta == 0.0 ? 0.0 : eta * neg_entropy);
}

inline double primal_objective(const TransportPlan& X, const RegularizedInstance& inst) {
  return primal_objective(X, inst.cost(), inst.eta());
}

struct MarginalPair {
  Histogram r;
  Histogram c;
};

/// (1 - eps'/8) (r, c) + (eps' / 8n) (1, 1). Every output entry is at least
/// eps' / (8n).
inline MarginalPair reweight_marginals(const Histogram& r, const Histogram& c,
                                       double eps_prime) {
  if (!(eps_prime > 0.0)) throw DomainError("reweight_marginals requires eps' > 0");
  if (r.size() != c.size()) throw DomainError("marginals differ in length");
  // Keep the map a convex combination even for eps' >= 8.
  const double keep = std::max(0.0, 1.0 - eps_prime / 8.0);
  const double floor = (1.0 - keep) / static_cast<double>(r.size());
  auto mix = [&](const Histogram& h) {
    Vector w(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) w[i] = keep * h[i] + floor;
    return Histogram(std::move(w));
  };
  return {mix(r), mix(c)};
}

/// Projects a nonnegative matrix onto the transportation polytope U(r, c):
/// shrink over-full rows, then over-full columns, then distribute the missing
/// mass with a rank-one correction.
inline TransportPlan round_to_polytope(const TransportPlan& X, const Histogram& r,
                                       const Histogram& c) {
  const std::size_t n = X.size();
  if (r.size() != n || c.size() != n) throw DomainError("round_to_polytope: dimension mismatch");
  Matrix Y = X.entries();

  const Vector rows = Y.row_sums();
  for (std::size_t i = 0; i < n; ++i) {
    const double scale = rows[i] > r[i] ? r[i] / rows[i] : 1.0;
    if (scale != 1.0)
      for (double& y : Y.row(i)) y *= scale;
  }
  const Vector cols = Y.col_sums();
  Vector col_scale(n, 1.0);
  for (std::size_t j = 0; j < n; ++j)
    if (cols[j] > c[j]) col_scale[j] = c[j] / cols[j];
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) Y(i, j) *= col_scale[j];

  const Vector rows2 = Y.row_sums();
  const Vector cols2 = Y.col_sums();
  Vector err_r(n), err_c(n);
  double err_mass = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    err_r[i] = std::max(0.0, r[i] - rows2[i]);
    err_c[i] = std::max(0.0, c[i] - cols2[i]);
    err_mass += err_r[i];
  }
  if (err_mass > 0.0) {
    for (std::size_t i = 0; i < n; ++i) {
      if (err_r[i] == 0.0) continue;
      const double w = err_r[i] / err_mass;
      for (std::size_t j = 0; j < n; ++j) Y(i, j) += w * err_c[j];
    }
  }
  return TransportPlan(std::move(Y));
}

/// R = ||C||_inf / eta + log n - 2 log(min_ij {r_i, c_j}).
inline double bound_R(const RegularizedInstance& inst) {
  const double smallest = std::min(inst.r().min(), inst.c().min());
  if (!(smallest > 0.0))
    throw DomainError("bound_R requires strictly positive marginals; reweight first");
  return inst.cost().max_abs() / inst.eta() + std::log(static_cast<double>(inst.size())) -
         2.0 * std::log(smallest);
}

/// l_inf bound eta (R + 1/2) on a minimizer of the log-sum-exp dual.
inline double bound_R_hat(const RegularizedInstance& inst) {
  return inst.eta() * (bound_R(inst) + 0.5);
}

struct Schedule {
  double eta = 0.0;
  double eps_prime = 0.0;
};

/// eta = eps / (4 log n), eps' = eps / (8 ||C||_inf).
inline Schedule schedule_eta_eps(double eps, std::size_t n, double c_max) {
  if (!(eps > 0.0)) throw DomainError("schedule requires eps > 0");
  if (n < 2) throw DomainError("schedule requires n >= 2");
  if (!(c_max > 0.0))
    throw DomainError("degenerate instance: ||C||_inf = 0, every plan costs 0");
  return {eps / (4.0 * std::log(static_cast<double>(n))), eps / (8.0 * c_max)};
}

}  // namespace eot
