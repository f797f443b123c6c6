#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "eot/core/types.hpp"

namespace eot {

enum class SolverStatus { Converged, MaxIterations, NumericalFailure };

inline std::string_view to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::Converged: return "converged";
    case SolverStatus::MaxIterations: return "max_iterations";
    case SolverStatus::NumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

/// One row of a solver trace. Record 0 describes the starting point.
struct IterationRecord {
  std::size_t iter = 0;
  /// E_t for the scaling solvers, ||A x - b||_1 for the accelerated ones.
  double residual = 0.0;
  double dual_value = 0.0;
  int line_search_doublings = 0;
  std::uint64_t grad_calls = 0;
  double elapsed = 0.0;
  // Accelerated solvers only: accepted curvature M^t, stepsize alpha^{t+1}
  // and accumulator abar^{t+1}.
  double curvature = 0.0;
  double step = 0.0;
  double accumulated = 0.0;
};

struct SolverTrace {
  std::vector<IterationRecord> records;
  SolverStatus status = SolverStatus::MaxIterations;
  std::size_t iterations = 0;
  std::string message;
  /// Iterations at which a checked inequality that is reported rather than
  /// enforced did not hold.
  std::vector<std::size_t> violations;

  const IterationRecord& last() const { return records.back(); }
  double final_residual() const { return records.empty() ? 0.0 : records.back().residual; }
};

/// Called after every iteration of a scaling solver with the current
/// potentials.
using PotentialObserver = std::function<void(std::size_t iter, const DualPotentials&)>;

struct SolverOptions {
  std::size_t max_iter = 0;  ///< 0 selects the solver default.
  /// Keep every k-th record (the first and last are always kept).
  std::size_t record_stride = 1;
  /// Throw InvariantViolation when a runtime-checkable convergence
  /// inequality fails.
#ifdef NDEBUG
  bool check_invariants = false;
#else
  bool check_invariants = true;
#endif
  /// Wall-clock budget in seconds; 0 disables it.
  double max_seconds = 0.0;
  PotentialObserver observer;
};

inline constexpr std::size_t kDefaultScalingMaxIter = 1'000'000;
inline constexpr std::size_t kDefaultAcceleratedMaxIter = 100'000;
inline constexpr int kMaxLineSearchDoublings = 64;

namespace detail {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline bool keep_record(std::size_t iter, std::size_t stride) {
  return stride <= 1 || iter % stride == 0;
}

}  // namespace detail

}  // namespace eot
