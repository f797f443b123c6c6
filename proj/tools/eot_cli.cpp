// Command-line front end: solve, gen, bench, oracle, compare.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "eot/harness/benchmark.hpp"
#include "eot/harness/output.hpp"
#include "eot/instances/instance_spec.hpp"
#include "eot/oracle/exact.hpp"
#include "eot/solvers/approx.hpp"

namespace {

using namespace eot;

enum ExitCode { kOk = 0, kUsage = 1, kNumerical = 2, kIo = 3 };

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for '" + path + "'");
}

json read_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what(), e.byte);
  }
}

json trace_json(const SolverTrace& trace) {
  json rows = json::array();
  for (const auto& r : trace.records)
    rows.push_back({{"iter", r.iter},
                    {"residual", r.residual},
                    {"dual_value", r.dual_value},
                    {"grad_calls", r.grad_calls},
                    {"elapsed", r.elapsed}});
  return rows;
}

struct SolveArgs {
  std::string input, out, method = "sinkhorn";
  double eps = 0.5;
  std::optional<double> eta;
  std::size_t max_iter = 0;
  std::size_t stride = 1;
};

int run_solve(const SolveArgs& a) {
  const Method method = parse_method(a.method);
  const Instance inst = load_instance(a.input);
  ApproxOptions opt;
  opt.solver.max_iter = a.max_iter;
  opt.solver.record_stride = a.stride;
  opt.solver.check_invariants = false;
  opt.eta_override = a.eta;
  const ApproxResult res = approx_ot(inst.cost, inst.r, inst.c, a.eps, method, opt);
  const double d = metric_d(res.plan, inst.r, inst.c);
  std::printf("method=%s n=%zu eta=%.6g eps=%.6g status=%s iterations=%zu cost=%.12g d=%.3g\n",
              std::string(to_string(method)).c_str(), inst.size(), res.schedule.eta, a.eps,
              std::string(to_string(res.trace.status)).c_str(), res.trace.iterations, res.cost, d);
  if (!a.out.empty()) {
    write_json(a.out, {{"method", to_string(method)},
                       {"n", inst.size()},
                       {"eta", res.schedule.eta},
                       {"eps", a.eps},
                       {"eps_prime", res.schedule.eps_prime},
                       {"status", to_string(res.trace.status)},
                       {"iterations", res.trace.iterations},
                       {"row_col_updates", row_col_updates(method, res.trace.iterations, inst.size())},
                       {"cost", res.cost},
                       {"final_d", d},
                       {"meta", inst.meta},
                       {"trace", trace_json(res.trace)}});
  }
  return res.trace.status == SolverStatus::Converged ? kOk : kNumerical;
}

struct GenArgs {
  std::size_t side = 8;
  double fg = 0.5;
  std::uint64_t seed = 0;
  std::size_t uniform = 0;
  std::string mnist, out;
};

int run_gen(const GenArgs& a) {
  InstanceSpec spec{SyntheticPair{a.side, a.fg, a.seed}};
  if (a.uniform) spec = uniform_instance_spec(a.uniform);
  if (!a.mnist.empty()) {
    MnistPair m;
    m.images_path = a.mnist;
    m.seed = a.seed;
    spec = InstanceSpec{m};
  }
  const Instance inst = materialize(spec);
  if (a.out.empty()) std::cout << instance_to_json(inst).dump() << '\n';
  else save_instance(a.out, inst);
  return kOk;
}

struct BenchArgs {
  std::string config, out_dir = "bench_out", format = "csv";
  bool plotdata = false;
  std::optional<std::size_t> threads;
};

int run_bench(const BenchArgs& a) {
  BenchConfig cfg = config_from_json(read_json(a.config));
  if (a.threads) cfg.threads = *a.threads;
  const OutputFormat format = parse_output_format(a.format);
  std::filesystem::create_directories(a.out_dir);
  JsonlWriter log(std::filesystem::path(a.out_dir) / "records.jsonl");
  std::size_t failures = 0;
  const auto records = run_benchmark(cfg, [&](const RunRecord& r) {
    log(r);
    failures += r.status == "numerical_failure";
    std::fprintf(stderr, "cell %zu %s seed=%llu %s: %s\n", r.cell, r.instance_kind.c_str(),
                 static_cast<unsigned long long>(r.seed), r.method.c_str(), r.status.c_str());
  });
  for (const auto& p : emit_outputs(records, a.out_dir, format, a.plotdata)) std::cout << p.string() << '\n';
  return failures ? kNumerical : kOk;
}

int run_oracle(const std::string& input) {
  const Instance inst = load_instance(input);
  const ExactSolution s = exact_ot(inst.cost, inst.r, inst.c);
  std::printf("%.15g\n", s.value);
  return kOk;
}

struct CompareArgs {
  std::string first = "sinkhorn", second = "greenkhorn";
  std::size_t side = 8, seeds = 10, max_iter = 0;
  double fg = 0.5, eta = 5.0, tolerance = 1e-6;
  std::string out;
};

int run_compare(const CompareArgs& a) {
  BenchConfig cfg;
  cfg.instances = {InstanceSpec{SyntheticPair{a.side, a.fg, 0}}};
  cfg.methods = {parse_method(a.first), parse_method(a.second)};
  if (cfg.methods[0] == cfg.methods[1]) throw DomainError("compare needs two different methods");
  cfg.grid = GridKind::Eta;
  cfg.grid_values = {a.eta};
  for (std::uint64_t s = 1; s <= a.seeds; ++s) cfg.seeds.push_back(s);
  cfg.tolerance = a.tolerance;
  cfg.budgets.max_iter = a.max_iter;
  const auto records = run_benchmark(cfg);
  const auto figures = group_figures(records);
  const ComparisonSeries cmp = figure_comparisons(figures.begin()->second).front();
  if (cmp.efforts.empty()) throw NumericalFailure("no common update levels to compare");
  const RatioStats pooled = cmp.pooled();
  const RatioStats last = cmp.stats_at(cmp.efforts.size() - 1);
  std::printf("ln(d_%s / d_%s) over %zu seeds, %zu update levels\n", cmp.first.c_str(), cmp.second.c_str(),
              a.seeds, cmp.efforts.size());
  std::printf("pooled  min=%.4f median=%.4f max=%.4f count=%zu\n", pooled.min, pooled.median, pooled.max,
              pooled.count);
  std::printf("at %zu updates  min=%.4f median=%.4f max=%.4f count=%zu\n", cmp.efforts.back(), last.min,
              last.median, last.max, last.count);
  if (!a.out.empty()) detail::write_text(a.out, ratios_csv({cmp}));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entropic optimal transport solvers and benchmarks"};
  app.require_subcommand(1);

  SolveArgs solve;
  auto* s = app.add_subcommand("solve", "Approximate OT on one instance");
  s->add_option("--input", solve.input, "Instance JSON")->required();
  s->add_option("--method", solve.method)->check(CLI::IsMember({"sinkhorn", "greenkhorn", "apdamd", "apdagd"}));
  s->add_option("--eps", solve.eps, "Target accuracy")->check(CLI::PositiveNumber);
  s->add_option("--eta", solve.eta, "Regularization; overrides eps/(4 ln n)")->check(CLI::PositiveNumber);
  s->add_option("--max-iter", solve.max_iter);
  s->add_option("--record-stride", solve.stride);
  s->add_option("--out", solve.out, "Trace JSON");

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate an instance");
  g->add_option("--side", gen.side)->check(CLI::Range(2, 16));
  g->add_option("--fg", gen.fg)->check(CLI::Range(0.0, 1.0));
  g->add_option("--seed", gen.seed);
  g->add_option("--uniform", gen.uniform, "Uniform instance of this size instead");
  g->add_option("--mnist", gen.mnist, "IDX image file to draw a pair from");
  g->add_option("--out", gen.out);

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "Run a benchmark grid");
  b->add_option("--config", bench.config)->required();
  b->add_option("--out-dir", bench.out_dir);
  b->add_option("--format", bench.format)->check(CLI::IsMember({"csv", "json"}));
  b->add_flag("--plotdata", bench.plotdata);
  b->add_option("--threads", bench.threads);

  std::string oracle_input;
  auto* o = app.add_subcommand("oracle", "Exact OT value");
  o->add_option("--input", oracle_input)->required();

  CompareArgs cmp;
  auto* c = app.add_subcommand("compare", "Competitive ratio of two methods on synthetic pairs");
  c->add_option("--first", cmp.first);
  c->add_option("--second", cmp.second);
  c->add_option("--side", cmp.side)->check(CLI::Range(2, 16));
  c->add_option("--fg", cmp.fg);
  c->add_option("--seeds", cmp.seeds)->check(CLI::PositiveNumber);
  c->add_option("--eta", cmp.eta)->check(CLI::PositiveNumber);
  c->add_option("--tolerance", cmp.tolerance);
  c->add_option("--max-iter", cmp.max_iter);
  c->add_option("--out", cmp.out, "Ratio table CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? kOk : kUsage;
  }

  try {
    if (*s) return run_solve(solve);
    if (*g) return run_gen(gen);
    if (*b) return run_bench(bench);
    if (*o) return run_oracle(oracle_input);
    if (*c) return run_compare(cmp);
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kIo;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kIo;
  } catch (const NumericalFailure& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kNumerical;
  } catch (const OverflowError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kNumerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  }
  return kUsage;
}
