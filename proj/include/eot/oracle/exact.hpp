#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "eot/core/errors.hpp"
#include "eot/core/types.hpp"

namespace eot {

inline constexpr std::size_t kExactMaxAtoms = 256;

struct ExactSolution {
  TransportPlan plan;
  double value = 0.0;
  /// (u, v) with u_i + v_j <= C_ij and equality on the support of the plan.
  std::optional<DualPotentials> certificate;
};

/// Largest violation of dual feasibility, max(0, u_i + v_j - C_ij).
inline double dual_infeasibility(const CostMatrix& C, const DualPotentials& cert) {
  double worst = 0.0;
  for (std::size_t i = 0; i < C.size(); ++i)
    for (std::size_t j = 0; j < C.size(); ++j)
      worst = std::max(worst, cert.u[i] + cert.v[j] - C(i, j));
  return worst;
}

/// sum_ij X_ij (C_ij - u_i - v_j).
inline double complementary_slackness(const CostMatrix& C, const TransportPlan& X,
                                      const DualPotentials& cert) {
  double s = 0.0;
  for (std::size_t i = 0; i < C.size(); ++i)
    for (std::size_t j = 0; j < C.size(); ++j) s += X(i, j) * std::abs(C(i, j) - cert.u[i] - cert.v[j]);
  return s;
}

namespace detail {

/// Transportation simplex on a spanning-tree basis of 2n - 1 cells. Row node
/// i is i, column node j is n + j.
class TransportationSimplex {
 public:
  TransportationSimplex(const CostMatrix& C, const Vector& supply, const Vector& demand)
      : C_(C), n_(C.size()), supply_(supply), demand_(demand), adj_(2 * C.size()) {}

  void solve() {
    initial_basis();
    const double tol = 1e-12 * std::max(1.0, C_.max_abs());
    const std::size_t max_pivots = 50 * n_ * n_ + 1000;
    std::size_t stalled = 0;
    for (std::size_t pivot = 0;; ++pivot) {
      if (pivot > max_pivots) throw NumericalFailure("exact_ot: pivot limit reached");
      compute_potentials();
      const bool bland = stalled > 2 * n_;
      std::size_t p = 0, q = 0;
      if (!entering(tol, bland, p, q)) break;
      const bool degenerate = pivot_on(p, q, bland);
      stalled = degenerate ? stalled + 1 : 0;
    }
    recompute_flows();
  }

  Matrix plan() const {
    Matrix X(n_, n_);
    for (const Cell& cell : cells_) X(cell.i, cell.j) = std::max(0.0, cell.x);
    return X;
  }
  DualPotentials potentials() const { return {u_, v_}; }

 private:
  struct Cell {
    std::size_t i, j;
    double x;
  };

  void add_cell(std::size_t i, std::size_t j, double x) {
    cells_.push_back({i, j, x});
    adj_[i].push_back(cells_.size() - 1);
    adj_[n_ + j].push_back(cells_.size() - 1);
  }

  // Staircase start: always 2n - 1 cells forming a tree, including
  // degenerate zero cells when a row and a column close together.
  void initial_basis() {
    Vector s = supply_, d = demand_;
    std::size_t i = 0, j = 0;
    while (i < n_ && j < n_) {
      const double x = std::min(s[i], d[j]);
      add_cell(i, j, x);
      s[i] -= x;
      d[j] -= x;
      if (i == n_ - 1) ++j;
      else if (j == n_ - 1) ++i;
      else if (s[i] <= d[j]) ++i;
      else ++j;
    }
  }

  std::size_t other_end(std::size_t cell, std::size_t node) const {
    return node < n_ ? n_ + cells_[cell].j : cells_[cell].i;
  }

  void compute_potentials() {
    u_.assign(n_, 0.0);
    v_.assign(n_, 0.0);
    std::vector<char> seen(2 * n_, 0);
    std::vector<std::size_t> stack = {0};
    seen[0] = 1;
    while (!stack.empty()) {
      const std::size_t node = stack.back();
      stack.pop_back();
      for (std::size_t id : adj_[node]) {
        const std::size_t next = other_end(id, node);
        if (seen[next]) continue;
        seen[next] = 1;
        const Cell& c = cells_[id];
        if (next >= n_) v_[c.j] = C_(c.i, c.j) - u_[c.i];
        else u_[c.i] = C_(c.i, c.j) - v_[c.j];
        stack.push_back(next);
      }
    }
  }

  bool entering(double tol, bool bland, std::size_t& p, std::size_t& q) const {
    double best = -tol;
    bool found = false;
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) {
        const double reduced = C_(i, j) - u_[i] - v_[j];
        if (reduced < best) {
          p = i;
          q = j;
          found = true;
          if (bland) return true;
          best = reduced;
        }
      }
    return found;
  }

  // Path in the tree from column q to row p; returns the cells in order.
  std::vector<std::size_t> tree_path(std::size_t p, std::size_t q) const {
    const std::size_t none = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> via(2 * n_, none);
    std::vector<char> seen(2 * n_, 0);
    std::vector<std::size_t> stack = {n_ + q};
    seen[n_ + q] = 1;
    while (!stack.empty() && !seen[p]) {
      const std::size_t node = stack.back();
      stack.pop_back();
      for (std::size_t id : adj_[node]) {
        const std::size_t next = other_end(id, node);
        if (seen[next]) continue;
        seen[next] = 1;
        via[next] = id;
        stack.push_back(next);
      }
    }
    if (!seen[p]) throw InvariantViolation("exact_ot: basis is not a spanning tree");
    std::vector<std::size_t> path;
    for (std::size_t node = p; node != n_ + q;) {
      const std::size_t id = via[node];
      path.push_back(id);
      node = other_end(id, node);
    }
    std::reverse(path.begin(), path.end());
    return path;
  }

  // Cells at even positions of the path from column q lose theta, odd ones
  // gain it. Returns true for a degenerate (zero-step) pivot.
  bool pivot_on(std::size_t p, std::size_t q, bool bland) {
    const std::vector<std::size_t> path = tree_path(p, q);
    std::size_t leave = path[0];
    for (std::size_t k = 0; k < path.size(); k += 2) {
      const Cell& c = cells_[path[k]];
      const Cell& l = cells_[leave];
      const bool smaller = c.x < l.x;
      const bool tie_break = c.x == l.x && bland && (c.i * n_ + c.j < l.i * n_ + l.j);
      if (smaller || tie_break) leave = path[k];
    }
    const double theta = cells_[leave].x;
    for (std::size_t k = 0; k < path.size(); ++k) cells_[path[k]].x += (k % 2 == 0 ? -theta : theta);

    Cell& out = cells_[leave];
    auto unlink = [&](std::size_t node) {
      auto& list = adj_[node];
      list.erase(std::find(list.begin(), list.end(), leave));
    };
    unlink(out.i);
    unlink(n_ + out.j);
    out = {p, q, theta};
    adj_[p].push_back(leave);
    adj_[n_ + q].push_back(leave);
    return theta == 0.0;
  }

  // Flows are determined by the tree and the marginals; peeling leaves
  // removes the drift accumulated over many pivots.
  void recompute_flows() {
    Vector s = supply_, d = demand_;
    std::vector<std::size_t> degree(2 * n_);
    for (std::size_t node = 0; node < 2 * n_; ++node) degree[node] = adj_[node].size();
    std::vector<char> done(cells_.size(), 0);
    std::vector<std::size_t> leaves;
    for (std::size_t node = 0; node < 2 * n_; ++node)
      if (degree[node] == 1) leaves.push_back(node);
    while (!leaves.empty()) {
      const std::size_t node = leaves.back();
      leaves.pop_back();
      if (degree[node] != 1) continue;
      std::size_t id = 0;
      for (std::size_t cand : adj_[node])
        if (!done[cand]) id = cand;
      Cell& c = cells_[id];
      const double x = node < n_ ? s[c.i] : d[c.j];
      c.x = x;
      s[c.i] -= x;
      d[c.j] -= x;
      done[id] = 1;
      const std::size_t other = other_end(id, node);
      --degree[node];
      if (--degree[other] == 1) leaves.push_back(other);
    }
  }

  const CostMatrix& C_;
  std::size_t n_;
  Vector supply_, demand_;
  std::vector<Cell> cells_;
  std::vector<std::vector<std::size_t>> adj_;
  Vector u_, v_;
};

}  // namespace detail

/// Unregularized optimal transport by the transportation simplex. Returns an
/// optimal vertex and a dual certificate.
inline ExactSolution exact_ot(const CostMatrix& C, const Histogram& r, const Histogram& c) {
  const std::size_t n = C.size();
  if (n > kExactMaxAtoms)
    throw RefusalError("exact_ot is limited to n <= " + std::to_string(kExactMaxAtoms) +
                       " (got " + std::to_string(n) + ")");
  if (r.size() != n || c.size() != n) throw DomainError("exact_ot: dimension mismatch");

  // Push the rounding-level imbalance between the two totals onto the
  // largest demand so the problem is exactly balanced.
  Vector demand = c.weights();
  double imbalance = 0.0;
  for (std::size_t k = 0; k < n; ++k) imbalance += r[k] - demand[k];
  const auto big = static_cast<std::size_t>(std::max_element(demand.begin(), demand.end()) - demand.begin());
  demand[big] += imbalance;

  detail::TransportationSimplex simplex(C, r.weights(), demand);
  simplex.solve();
  ExactSolution out;
  out.plan = TransportPlan(simplex.plan());
  out.value = out.plan.cost(C);
  out.certificate = simplex.potentials();
  return out;
}

}  // namespace eot
