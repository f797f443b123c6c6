#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "eot/core/errors.hpp"
#include "eot/core/primal.hpp"
#include "eot/core/types.hpp"
#include "eot/harness/metrics.hpp"
#include "eot/instances/instance_spec.hpp"
#include "eot/oracle/exact.hpp"
#include "eot/solvers/approx.hpp"

namespace eot {

enum class GridKind { Eps, Eta };

inline std::string_view to_string(GridKind g) { return g == GridKind::Eps ? "eps" : "eta"; }

struct Budgets {
  std::size_t max_iter = 0;  ///< 0 selects the solver default
  double max_seconds = 0.0;  ///< 0 disables the time budget
};

struct BenchConfig {
  std::vector<InstanceSpec> instances;
  std::vector<Method> methods;
  GridKind grid = GridKind::Eps;
  std::vector<double> grid_values;
  std::vector<std::uint64_t> seeds;
  Budgets budgets;
  /// Stopping threshold on d for eta-grid cells.
  double tolerance = 1e-6;
  /// Solve each instance exactly (n <= 256) and report the optimal value.
  bool oracle = false;
  std::size_t threads = 1;
  std::size_t record_stride = 1;
};

inline BenchConfig config_from_json(const json& j) {
  BenchConfig cfg;
  try {
    for (const json& s : j.at("instances")) cfg.instances.push_back(spec_from_json(s));
    for (const json& m : j.at("methods")) cfg.methods.push_back(parse_method(m.get<std::string>()));
    const bool has_eps = j.contains("eps_grid"), has_eta = j.contains("eta_grid");
    if (has_eps == has_eta) throw DomainError("bench config needs exactly one of eps_grid, eta_grid");
    cfg.grid = has_eps ? GridKind::Eps : GridKind::Eta;
    cfg.grid_values = j.at(has_eps ? "eps_grid" : "eta_grid").get<std::vector<double>>();
    cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("budgets")) {
      const json& b = j["budgets"];
      cfg.budgets.max_iter = b.value("max_iter", std::size_t{0});
      cfg.budgets.max_seconds = b.value("max_seconds", 0.0);
    }
    cfg.tolerance = j.value("tolerance", cfg.tolerance);
    cfg.oracle = j.value("oracle", cfg.oracle);
    cfg.threads = j.value("threads", cfg.threads);
    cfg.record_stride = j.value("record_stride", cfg.record_stride);
  } catch (const json::exception& e) {
    throw DomainError(std::string("malformed bench config: ") + e.what());
  }
  if (cfg.instances.empty() || cfg.methods.empty() || cfg.grid_values.empty() || cfg.seeds.empty())
    throw DomainError("bench config has an empty instances, methods, grid or seeds list");
  for (double g : cfg.grid_values)
    if (!(g > 0.0)) throw DomainError("grid values must be positive");
  if (cfg.record_stride == 0) cfg.record_stride = 1;
  return cfg;
}

inline json config_to_json(const BenchConfig& cfg) {
  json j;
  j["instances"] = json::array();
  for (const auto& s : cfg.instances) j["instances"].push_back(spec_to_json(s));
  j["methods"] = json::array();
  for (Method m : cfg.methods) j["methods"].push_back(std::string(to_string(m)));
  j[cfg.grid == GridKind::Eps ? "eps_grid" : "eta_grid"] = cfg.grid_values;
  j["seeds"] = cfg.seeds;
  j["budgets"] = {{"max_iter", cfg.budgets.max_iter}, {"max_seconds", cfg.budgets.max_seconds}};
  j["tolerance"] = cfg.tolerance;
  j["oracle"] = cfg.oracle;
  j["threads"] = cfg.threads;
  j["record_stride"] = cfg.record_stride;
  return j;
}

struct SeriesPoint {
  std::size_t iteration = 0;
  std::size_t updates = 0;
  double d = 0.0;
  friend bool operator==(const SeriesPoint&, const SeriesPoint&) = default;
};

/// One benchmark cell.
struct RunRecord {
  std::size_t cell = 0;
  std::string instance_kind;
  std::uint64_t seed = 0;
  std::size_t n = 0;
  std::optional<double> fg_fraction;
  std::string rng;
  std::string method;
  double eta = 0.0;
  std::optional<double> eps;
  std::optional<double> eps_prime;
  std::string status;
  std::string message;
  std::size_t iterations = 0;
  std::size_t row_col_updates = 0;
  std::uint64_t grad_calls = 0;
  double wall_seconds = 0.0;
  /// Distance of the rounded plan to the original marginals.
  double final_d = 0.0;
  /// Distance of the solver output to the marginals it was run on.
  double unrounded_d = 0.0;
  double cost = 0.0;
  std::optional<double> oracle_value;
  /// Distance curve of the solver iterates, for plot data.
  std::vector<SeriesPoint> series;

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

using RecordSink = std::function<void(const RunRecord&)>;

namespace detail {

struct PreparedInstance {
  std::optional<Instance> instance;
  std::string error;
  std::once_flag oracle_once;
  std::optional<double> oracle_value;
};

inline std::vector<SeriesPoint> series_of(const SolverTrace& trace, Method m, std::size_t n) {
  std::vector<SeriesPoint> out;
  out.reserve(trace.records.size());
  for (const auto& rec : trace.records)
    out.push_back({rec.iter, row_col_updates(m, rec.iter, n), rec.residual});
  return out;
}

inline void fill_from_trace(RunRecord& rec, const SolverTrace& trace, Method m, std::size_t n) {
  rec.status = std::string(to_string(trace.status));
  rec.message = trace.message;
  rec.iterations = trace.iterations;
  rec.row_col_updates = row_col_updates(m, trace.iterations, n);
  rec.grad_calls = trace.records.empty() ? 0 : trace.last().grad_calls;
  rec.unrounded_d = trace.final_residual();
  rec.series = series_of(trace, m, n);
}

inline void run_cell(RunRecord& rec, const Instance& inst, Method method, GridKind grid,
                     double value, const BenchConfig& cfg) {
  SolverOptions solver;
  solver.max_iter = cfg.budgets.max_iter;
  solver.max_seconds = cfg.budgets.max_seconds;
  solver.record_stride = cfg.record_stride;
  solver.check_invariants = false;
  const std::size_t n = inst.size();
  if (grid == GridKind::Eps) {
    ApproxOptions options;
    options.solver = solver;
    ApproxResult res = approx_ot(inst.cost, inst.r, inst.c, value, method, options);
    rec.eta = res.schedule.eta;
    rec.eps = value;
    rec.eps_prime = res.schedule.eps_prime;
    fill_from_trace(rec, res.trace, method, n);
    rec.final_d = metric_d(res.plan, inst.r, inst.c);
    rec.cost = res.cost;
    return;
  }
  // Fixed eta: solve on the original marginals unless one of them has an
  // empty atom, in which case the usual reweighting at eps' = tolerance
  // restores strict positivity.
  rec.eta = value;
  const bool positive = inst.r.min() > 0.0 && inst.c.min() > 0.0;
  const MarginalPair marg = positive ? MarginalPair{inst.r, inst.c}
                                     : reweight_marginals(inst.r, inst.c, cfg.tolerance);
  const RegularizedInstance reg(inst.cost, marg.r, marg.c, value);
  SolverRun run = run_solver(method, reg, cfg.tolerance, solver);
  fill_from_trace(rec, run.trace, method, n);
  if (run.trace.status == SolverStatus::NumericalFailure) return;
  const TransportPlan rounded = round_to_polytope(run.plan, inst.r, inst.c);
  rec.final_d = metric_d(rounded, inst.r, inst.c);
  rec.cost = rounded.cost(inst.cost);
}

}  // namespace detail

/// Runs the cross product instances x seeds x grid x methods. Records are
/// returned in cell order; `sink` sees each one as soon as it completes,
/// from one thread at a time. A failing cell is reported in its record.
inline std::vector<RunRecord> run_benchmark(const BenchConfig& cfg, const RecordSink& sink = {}) {
  const std::size_t seeds = cfg.seeds.size();
  std::vector<std::unique_ptr<detail::PreparedInstance>> prepared;
  for (const InstanceSpec& spec : cfg.instances)
    for (std::uint64_t seed : cfg.seeds) {
      auto p = std::make_unique<detail::PreparedInstance>();
      try {
        p->instance = materialize(spec.with_seed(seed));
      } catch (const std::exception& e) {
        p->error = e.what();
      }
      prepared.push_back(std::move(p));
    }

  const std::size_t per_instance = cfg.grid_values.size() * cfg.methods.size();
  const std::size_t total = prepared.size() * per_instance;
  std::vector<RunRecord> records(total);
  std::mutex sink_mu;
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t cell = next++; cell < total; cell = next++) {
      const std::size_t inst_idx = cell / per_instance;
      const std::size_t grid_idx = (cell % per_instance) / cfg.methods.size();
      const Method method = cfg.methods[cell % cfg.methods.size()];
      const InstanceSpec& spec = cfg.instances[inst_idx / seeds];
      detail::PreparedInstance& prep = *prepared[inst_idx];

      RunRecord& rec = records[cell];
      rec.cell = cell;
      rec.instance_kind = spec.kind_name();
      rec.seed = cfg.seeds[inst_idx % seeds];
      rec.method = std::string(to_string(method));
      if (auto* s = std::get_if<SyntheticPair>(&spec.kind)) {
        rec.fg_fraction = s->fg_fraction;
        rec.rng = kImageRngName;
      }
      const double value = cfg.grid_values[grid_idx];
      if (cfg.grid == GridKind::Eps) rec.eps = value;
      else rec.eta = value;

      detail::Stopwatch clock;
      if (!prep.instance) {
        rec.status = "error";
        rec.message = prep.error;
      } else {
        const Instance& inst = *prep.instance;
        rec.n = inst.size();
        try {
          detail::run_cell(rec, inst, method, cfg.grid, value, cfg);
        } catch (const NumericalFailure& e) {
          rec.status = "numerical_failure";
          rec.message = e.what();
        } catch (const std::exception& e) {
          rec.status = "error";
          rec.message = e.what();
        }
        rec.wall_seconds = clock.seconds();
        if (cfg.oracle) {
          std::call_once(prep.oracle_once, [&] {
            try {
              prep.oracle_value = exact_ot(inst.cost, inst.r, inst.c).value;
            } catch (const std::exception&) {
            }
          });
          rec.oracle_value = prep.oracle_value;
        }
      }
      if (sink) {
        std::lock_guard<std::mutex> lock(sink_mu);
        sink(rec);
      }
    }
  };

  const std::size_t threads = std::max<std::size_t>(1, std::min(cfg.threads, total));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return records;
}

}  // namespace eot
