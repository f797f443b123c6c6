#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace eot {

/// log(sum_k exp(x_k)) with max-subtraction. Returns -inf for an empty
/// input or when every term is -inf.
inline double logsumexp(std::span<const double> x) {
  double top = -std::numeric_limits<double>::infinity();
  for (double v : x) top = std::max(top, v);
  if (!std::isfinite(top)) return top;
  double acc = 0.0;
  for (double v : x) acc += std::exp(v - top);
  return top + std::log(acc);
}

/// Streaming variant for sums whose terms are produced on the fly.
class LogSumExpAccumulator {
 public:
  void add(double v) {
    if (v <= top_) {
      acc_ += std::exp(v - top_);
    } else {
      acc_ = acc_ * std::exp(top_ - v) + 1.0;
      top_ = v;
    }
  }
  double value() const {
    if (!std::isfinite(top_)) return top_;
    return top_ + std::log(acc_);
  }

 private:
  double top_ = -std::numeric_limits<double>::infinity();
  double acc_ = 0.0;
};

/// Largest argument accepted by std::exp without overflow.
inline constexpr double kMaxExpArgument = 709.782712893384;

}  // namespace eot
