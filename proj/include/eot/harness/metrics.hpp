#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iterator>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "eot/core/errors.hpp"
#include "eot/core/types.hpp"

namespace eot {

/// Distance of X to U(r, c): ||r(X) - r||_1 + ||c(X) - c||_1.
inline double metric_d(const TransportPlan& X, const Histogram& r, const Histogram& c) {
  if (X.size() != r.size() || X.size() != c.size()) throw DomainError("metric_d: dimension mismatch");
  return l1_distance(X.row_sums(), r.weights()) + l1_distance(X.col_sums(), c.weights());
}

/// Natural log of d1 / d2.
inline double competitive_ratio(double d1, double d2) {
  if (!(d1 > 0.0) || !(d2 > 0.0))
    throw DomainError("competitive_ratio needs strictly positive distances");
  return std::log(d1 / d2);
}

struct RatioStats {
  double min = 0.0;
  double median = 0.0;
  double max = 0.0;
  std::size_t count = 0;
};

/// Median of the middle pair for even sizes.
inline RatioStats ratio_stats(std::vector<double> values) {
  RatioStats s;
  s.count = values.size();
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  s.min = values.front();
  s.max = values.back();
  const std::size_t mid = values.size() / 2;
  s.median = values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
  return s;
}

/// Effort-indexed distance curve of one run: (row/col updates, d) pairs with
/// nondecreasing effort.
using DistanceCurve = std::vector<std::pair<std::size_t, double>>;

/// Value of a step curve at `effort`: the last point at or before it.
inline double curve_at(const DistanceCurve& curve, std::size_t effort) {
  auto it = std::upper_bound(curve.begin(), curve.end(), effort,
                             [](std::size_t e, const auto& p) { return e < p.first; });
  if (it == curve.begin()) throw DomainError("curve_at: effort precedes the first point");
  return std::prev(it)->second;
}

/// d-values of two algorithms paired at common effort levels, one pair per
/// seed and level, with competitive-ratio statistics per level.
struct ComparisonSeries {
  std::string first;
  std::string second;
  std::vector<std::size_t> efforts;
  /// pairs[level] holds (d_first, d_second) for every seed.
  std::vector<std::vector<std::pair<double, double>>> pairs;

  /// Statistics of ln(d_first / d_second) at one level, over pairs where
  /// both distances are strictly positive.
  RatioStats stats_at(std::size_t level) const {
    std::vector<double> ratios;
    for (const auto& [a, b] : pairs.at(level))
      if (a > 0.0 && b > 0.0) ratios.push_back(competitive_ratio(a, b));
    return ratio_stats(std::move(ratios));
  }

  std::vector<RatioStats> stats() const {
    std::vector<RatioStats> out;
    for (std::size_t k = 0; k < efforts.size(); ++k) out.push_back(stats_at(k));
    return out;
  }

  /// Pools the ratios of every level and seed.
  RatioStats pooled() const {
    std::vector<double> ratios;
    for (const auto& level : pairs)
      for (const auto& [a, b] : level)
        if (a > 0.0 && b > 0.0) ratios.push_back(competitive_ratio(a, b));
    return ratio_stats(std::move(ratios));
  }
};

/// Pairs the curves seed by seed at multiples of `stride` updates, up to the
/// smaller final effort of each pair. Levels where some seed has run out are
/// dropped so every level holds one pair per seed.
inline ComparisonSeries build_comparison(std::string first, std::string second,
                                         const std::vector<DistanceCurve>& curves_first,
                                         const std::vector<DistanceCurve>& curves_second,
                                         std::size_t stride) {
  if (curves_first.size() != curves_second.size())
    throw DomainError("build_comparison: seed counts differ");
  if (stride == 0) throw DomainError("build_comparison: stride must be positive");
  ComparisonSeries out{std::move(first), std::move(second), {}, {}};
  std::size_t horizon = std::numeric_limits<std::size_t>::max();
  for (std::size_t s = 0; s < curves_first.size(); ++s) {
    if (curves_first[s].empty() || curves_second[s].empty()) return out;
    horizon = std::min({horizon, curves_first[s].back().first, curves_second[s].back().first});
  }
  if (curves_first.empty()) return out;
  for (std::size_t effort = stride; effort <= horizon; effort += stride) {
    std::vector<std::pair<double, double>> level;
    for (std::size_t s = 0; s < curves_first.size(); ++s)
      level.emplace_back(curve_at(curves_first[s], effort), curve_at(curves_second[s], effort));
    out.efforts.push_back(effort);
    out.pairs.push_back(std::move(level));
  }
  return out;
}

}  // namespace eot
