#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>

#include "eot/core/errors.hpp"
#include "eot/core/matrix.hpp"

namespace eot {

inline constexpr double kHistogramSumTolerance = 1e-12;
inline constexpr double kFeasibilityTolerance = 1e-9;

inline double l1_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DomainError("l1_distance: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
  return acc;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

/// Probability vector on n atoms. Entries are nonnegative and sum to one
/// within kHistogramSumTolerance.
class Histogram {
 public:
  Histogram() = default;
  explicit Histogram(Vector weights) : weights_(std::move(weights)) {
    if (weights_.empty()) throw DomainError("histogram must have at least one atom");
    double total = 0.0;
    for (double w : weights_) {
      if (!(w >= 0.0) || !std::isfinite(w))
        throw DomainError("histogram entries must be finite and nonnegative");
      total += w;
    }
    if (std::abs(total - 1.0) > kHistogramSumTolerance)
      throw DomainError("histogram entries sum to " + std::to_string(total) +
                        ", expected 1");
  }

  /// Divides nonnegative masses by their total.
  static Histogram normalized(Vector masses) {
    double total = 0.0;
    for (double w : masses) {
      if (!(w >= 0.0) || !std::isfinite(w))
        throw DomainError("masses must be finite and nonnegative");
      total += w;
    }
    if (!(total > 0.0)) throw DomainError("cannot normalize zero total mass");
    for (double& w : masses) w /= total;
    return Histogram(std::move(masses));
  }

  static Histogram uniform(std::size_t n) { return Histogram(Vector(n, 1.0 / static_cast<double>(n))); }

  std::size_t size() const noexcept { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  const Vector& weights() const noexcept { return weights_; }
  double min() const { return *std::min_element(weights_.begin(), weights_.end()); }

  friend bool operator==(const Histogram&, const Histogram&) = default;

 private:
  Vector weights_;
};

/// Square nonnegative cost matrix with its cached maximum entry.
class CostMatrix {
 public:
  CostMatrix() = default;
  explicit CostMatrix(Matrix entries) : entries_(std::move(entries)) {
    if (entries_.rows() != entries_.cols() || entries_.rows() == 0)
      throw DomainError("cost matrix must be square and nonempty");
    for (double x : entries_.flat()) {
      if (!(x >= 0.0) || !std::isfinite(x))
        throw DomainError("cost entries must be finite and nonnegative");
      max_abs_ = std::max(max_abs_, x);
    }
  }

  std::size_t size() const noexcept { return entries_.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return entries_(i, j); }
  const Matrix& entries() const noexcept { return entries_; }
  double max_abs() const noexcept { return max_abs_; }

 private:
  Matrix entries_;
  double max_abs_ = 0.0;
};

/// Scaled dual potentials (u, v). The same container carries the
/// lambda = (alpha, beta) parameterization used by the accelerated solvers.
struct DualPotentials {
  Vector u;
  Vector v;

  DualPotentials() = default;
  DualPotentials(Vector u_, Vector v_) : u(std::move(u_)), v(std::move(v_)) {
    if (u.size() != v.size()) throw DomainError("potentials must have equal length");
  }
  static DualPotentials zeros(std::size_t n) { return {Vector(n, 0.0), Vector(n, 0.0)}; }

  std::size_t size() const noexcept { return u.size(); }

  bool all_finite() const {
    auto finite = [](double x) { return std::isfinite(x); };
    return std::all_of(u.begin(), u.end(), finite) &&
           std::all_of(v.begin(), v.end(), finite);
  }

  /// Stacked (u; v) as a 2n-vector.
  Vector stacked() const {
    Vector out(u);
    out.insert(out.end(), v.begin(), v.end());
    return out;
  }
  static DualPotentials from_stacked(std::span<const double> z) {
    const std::size_t n = z.size() / 2;
    return {Vector(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(n)),
            Vector(z.begin() + static_cast<std::ptrdiff_t>(n), z.end())};
  }
};

/// alpha = eta * (u + 1/2), beta = eta * (v + 1/2).
inline DualPotentials to_lambda(const DualPotentials& pots, double eta) {
  DualPotentials out = pots;
  for (double& x : out.u) x = eta * (x + 0.5);
  for (double& x : out.v) x = eta * (x + 0.5);
  return out;
}

inline DualPotentials from_lambda(const DualPotentials& lambda, double eta) {
  DualPotentials out = lambda;
  for (double& x : out.u) x = x / eta - 0.5;
  for (double& x : out.v) x = x / eta - 0.5;
  return out;
}

/// Nonnegative n x n matrix of transported mass.
class TransportPlan {
 public:
  TransportPlan() = default;
  explicit TransportPlan(Matrix entries) : entries_(std::move(entries)) {
    if (entries_.rows() != entries_.cols())
      throw DomainError("transport plan must be square");
    for (double x : entries_.flat())
      if (!(x >= 0.0)) throw DomainError("transport plan entries must be nonnegative");
  }

  std::size_t size() const noexcept { return entries_.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return entries_(i, j); }
  const Matrix& entries() const noexcept { return entries_; }
  Vector row_sums() const { return entries_.row_sums(); }
  Vector col_sums() const { return entries_.col_sums(); }
  double total_mass() const {
    return std::accumulate(entries_.flat().begin(), entries_.flat().end(), 0.0);
  }

  /// Row sums match r and column sums match c, each within tol in l1.
  bool feasible_for(const Histogram& r, const Histogram& c,
                    double tol = kFeasibilityTolerance) const {
    if (r.size() != size() || c.size() != size()) return false;
    return l1_distance(row_sums(), r.weights()) <= tol &&
           l1_distance(col_sums(), c.weights()) <= tol;
  }

  double cost(const CostMatrix& C) const {
    if (C.size() != size()) throw DomainError("cost/plan dimension mismatch");
    return dot(C.entries().flat(), entries_.flat());
  }

 private:
  Matrix entries_;
};

/// Entropic OT instance (C, r, c, eta).
class RegularizedInstance {
 public:
  RegularizedInstance(CostMatrix cost, Histogram r, Histogram c, double eta)
      : cost_(std::move(cost)), r_(std::move(r)), c_(std::move(c)), eta_(eta) {
    if (!(eta_ > 0.0) || !std::isfinite(eta_))
      throw DomainError("regularization eta must be positive and finite");
    if (r_.size() != cost_.size() || c_.size() != cost_.size())
      throw DomainError("marginal and cost dimensions disagree");
  }

  std::size_t size() const noexcept { return cost_.size(); }
  const CostMatrix& cost() const noexcept { return cost_; }
  const Histogram& r() const noexcept { return r_; }
  const Histogram& c() const noexcept { return c_; }
  double eta() const noexcept { return eta_; }

  /// Log-kernel entry -C_ij / eta.
  double log_kernel(std::size_t i, std::size_t j) const { return -cost_(i, j) / eta_; }

  bool strictly_positive_marginals() const { return r_.min() > 0.0 && c_.min() > 0.0; }

 private:
  CostMatrix cost_;
  Histogram r_;
  Histogram c_;
  double eta_;
};

/// Implicit marginal map A: vec(X) -> (X 1; X^T 1) together with the target b.
/// A is never stored; every column of A has exactly two unit entries.
class ConstraintOperator {
 public:
  ConstraintOperator(const Histogram& r, const Histogram& c) : n_(r.size()) {
    if (c.size() != n_) throw DomainError("constraint marginals differ in length");
    b_ = r.weights();
    b_.insert(b_.end(), c.weights().begin(), c.weights().end());
  }

  std::size_t atoms() const noexcept { return n_; }
  const Vector& b() const noexcept { return b_; }
  static constexpr double norm_1to1() noexcept { return 2.0; }

  /// A * vec(X) for a row-major n^2 vector.
  Vector apply(std::span<const double> x) const {
    if (x.size() != n_ * n_) throw DomainError("constraint operand has wrong length");
    Vector out(2 * n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) {
        out[i] += x[i * n_ + j];
        out[n_ + j] += x[i * n_ + j];
      }
    return out;
  }

  /// ||A x - b||_1.
  double residual_l1(std::span<const double> x) const {
    return l1_distance(apply(x), b_);
  }

 private:
  std::size_t n_;
  Vector b_;
};

}  // namespace eot
