#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "eot/core/errors.hpp"
#include "eot/harness/benchmark.hpp"
#include "eot/harness/metrics.hpp"

namespace eot {

enum class OutputFormat { Csv, Json };

inline OutputFormat parse_output_format(std::string_view s) {
  if (s == "csv") return OutputFormat::Csv;
  if (s == "json") return OutputFormat::Json;
  throw DomainError("unknown output format '" + std::string(s) + "' (expected csv or json)");
}

struct EmitOptions {
  /// Write wall-clock fields. Golden-file comparisons turn this off.
  bool timing = true;
};

namespace detail {

/// Fixed-width decimal rendering used for every real in CSV output.
inline std::string fmt_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

inline std::string fmt_opt(const std::optional<double>& x) { return x ? fmt_real(*x) : ""; }

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch == '\n' ? ' ' : ch;
  }
  return out + "\"";
}

inline json opt_json(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

inline std::optional<double> opt_from(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<double>();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace detail

inline const std::vector<std::string>& summary_columns(bool timing) {
  static const std::vector<std::string> base = {
      "cell", "instance_kind", "seed", "n", "fg_fraction", "rng", "method", "eta", "eps",
      "eps_prime", "status", "iterations", "row_col_updates", "grad_calls", "final_d",
      "unrounded_d", "cost", "oracle_value", "message"};
  static const std::vector<std::string> with_time = [] {
    auto cols = base;
    cols.insert(cols.end() - 1, "wall_seconds");
    return cols;
  }();
  return timing ? with_time : base;
}

inline std::string records_to_csv(const std::vector<RunRecord>& records, const EmitOptions& opt = {}) {
  std::ostringstream out;
  const auto& cols = summary_columns(opt.timing);
  for (std::size_t k = 0; k < cols.size(); ++k) out << (k ? "," : "") << cols[k];
  out << '\n';
  for (const RunRecord& r : records) {
    out << r.cell << ',' << r.instance_kind << ',' << r.seed << ',' << r.n << ','
        << detail::fmt_opt(r.fg_fraction) << ',' << r.rng << ',' << r.method << ','
        << detail::fmt_real(r.eta) << ',' << detail::fmt_opt(r.eps) << ','
        << detail::fmt_opt(r.eps_prime) << ',' << r.status << ',' << r.iterations << ','
        << r.row_col_updates << ',' << r.grad_calls << ',' << detail::fmt_real(r.final_d) << ','
        << detail::fmt_real(r.unrounded_d) << ',' << detail::fmt_real(r.cost) << ','
        << detail::fmt_opt(r.oracle_value) << ',';
    if (opt.timing) out << detail::fmt_real(r.wall_seconds) << ',';
    out << detail::csv_escape(r.message) << '\n';
  }
  return out.str();
}

/// Summary fields of a record; the distance series is left out.
inline json record_to_json(const RunRecord& r, const EmitOptions& opt = {}) {
  json j = {{"cell", r.cell},
            {"instance_kind", r.instance_kind},
            {"seed", r.seed},
            {"n", r.n},
            {"fg_fraction", detail::opt_json(r.fg_fraction)},
            {"rng", r.rng},
            {"method", r.method},
            {"eta", r.eta},
            {"eps", detail::opt_json(r.eps)},
            {"eps_prime", detail::opt_json(r.eps_prime)},
            {"status", r.status},
            {"iterations", r.iterations},
            {"row_col_updates", r.row_col_updates},
            {"grad_calls", r.grad_calls},
            {"final_d", r.final_d},
            {"unrounded_d", r.unrounded_d},
            {"cost", r.cost},
            {"oracle_value", detail::opt_json(r.oracle_value)},
            {"message", r.message}};
  if (opt.timing) j["wall_seconds"] = r.wall_seconds;
  return j;
}

inline RunRecord record_from_json(const json& j) {
  RunRecord r;
  try {
    r.cell = j.at("cell").get<std::size_t>();
    r.instance_kind = j.at("instance_kind").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.n = j.at("n").get<std::size_t>();
    r.fg_fraction = detail::opt_from(j, "fg_fraction");
    r.rng = j.at("rng").get<std::string>();
    r.method = j.at("method").get<std::string>();
    r.eta = j.at("eta").get<double>();
    r.eps = detail::opt_from(j, "eps");
    r.eps_prime = detail::opt_from(j, "eps_prime");
    r.status = j.at("status").get<std::string>();
    r.iterations = j.at("iterations").get<std::size_t>();
    r.row_col_updates = j.at("row_col_updates").get<std::size_t>();
    r.grad_calls = j.at("grad_calls").get<std::uint64_t>();
    r.final_d = j.at("final_d").get<double>();
    r.unrounded_d = j.at("unrounded_d").get<double>();
    r.cost = j.at("cost").get<double>();
    r.oracle_value = detail::opt_from(j, "oracle_value");
    r.message = j.at("message").get<std::string>();
    r.wall_seconds = j.value("wall_seconds", 0.0);
  } catch (const json::exception& e) {
    throw DomainError(std::string("malformed run record: ") + e.what());
  }
  return r;
}

inline std::string records_to_json(const std::vector<RunRecord>& records, const EmitOptions& opt = {}) {
  json arr = json::array();
  for (const RunRecord& r : records) arr.push_back(record_to_json(r, opt));
  return arr.dump(2) + "\n";
}

inline std::vector<RunRecord> records_from_json(const std::string& text) {
  std::vector<RunRecord> out;
  json arr;
  try {
    arr = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid records JSON: ") + e.what(), e.byte);
  }
  for (const json& j : arr) out.push_back(record_from_json(j));
  return out;
}

/// Records that share an instance family, size and grid point form one figure.
struct FigureKey {
  std::string kind;
  std::size_t n;
  std::optional<double> fg_fraction;
  std::string grid;
  double value;

  auto tie() const { return std::tie(kind, n, fg_fraction, grid, value); }
  bool operator<(const FigureKey& o) const { return tie() < o.tie(); }

  std::string stem() const {
    std::string s = kind + "_n" + std::to_string(n);
    if (fg_fraction) s += "_fg" + detail::fmt_real(*fg_fraction);
    return s + "_" + grid + detail::fmt_real(value);
  }
};

inline FigureKey figure_key(const RunRecord& r) {
  if (r.eps) return {r.instance_kind, r.n, r.fg_fraction, "eps", *r.eps};
  return {r.instance_kind, r.n, r.fg_fraction, "eta", r.eta};
}

inline std::map<FigureKey, std::vector<const RunRecord*>> group_figures(
    const std::vector<RunRecord>& records) {
  std::map<FigureKey, std::vector<const RunRecord*>> out;
  for (const RunRecord& r : records) out[figure_key(r)].push_back(&r);
  return out;
}

inline DistanceCurve curve_of(const RunRecord& r) {
  DistanceCurve c;
  for (const auto& p : r.series) c.emplace_back(p.updates, p.d);
  return c;
}

/// Comparison of every ordered method pair (in order of first appearance)
/// within one figure, over the seeds both methods ran on.
inline std::vector<ComparisonSeries> figure_comparisons(const std::vector<const RunRecord*>& figure) {
  std::vector<std::string> methods;
  for (const RunRecord* r : figure)
    if (std::find(methods.begin(), methods.end(), r->method) == methods.end())
      methods.push_back(r->method);
  std::vector<ComparisonSeries> out;
  for (std::size_t a = 0; a < methods.size(); ++a)
    for (std::size_t b = a + 1; b < methods.size(); ++b) {
      std::map<std::uint64_t, DistanceCurve> first, second;
      for (const RunRecord* r : figure) {
        if (r->series.empty()) continue;
        if (r->method == methods[a]) first[r->seed] = curve_of(*r);
        if (r->method == methods[b]) second[r->seed] = curve_of(*r);
      }
      std::vector<DistanceCurve> ca, cb;
      for (auto& [seed, curve] : first)
        if (second.count(seed)) {
          ca.push_back(std::move(curve));
          cb.push_back(std::move(second[seed]));
        }
      const std::size_t stride = figure.front()->n ? figure.front()->n : 1;
      out.push_back(build_comparison(methods[a], methods[b], ca, cb, stride));
    }
  return out;
}

inline std::string series_csv(const std::vector<const RunRecord*>& figure) {
  std::ostringstream out;
  out << "iteration,updates,d,algorithm,seed\n";
  for (const RunRecord* r : figure)
    for (const SeriesPoint& p : r->series)
      out << p.iteration << ',' << p.updates << ',' << detail::fmt_real(p.d) << ',' << r->method << ','
          << r->seed << '\n';
  return out.str();
}

inline std::string ratios_csv(const std::vector<ComparisonSeries>& comparisons) {
  std::ostringstream out;
  out << "first,second,updates,min,median,max,count\n";
  for (const ComparisonSeries& cmp : comparisons) {
    const auto stats = cmp.stats();
    for (std::size_t k = 0; k < cmp.efforts.size(); ++k) {
      if (stats[k].count == 0) continue;
      out << cmp.first << ',' << cmp.second << ',' << cmp.efforts[k] << ','
          << detail::fmt_real(stats[k].min) << ',' << detail::fmt_real(stats[k].median) << ','
          << detail::fmt_real(stats[k].max) << ',' << stats[k].count << '\n';
    }
  }
  return out.str();
}

/// Writes summary.{csv,json} into `dir` and, with `plotdata`, one
/// series_<figure>.csv and ratios_<figure>.csv per figure. Returns the paths
/// written.
inline std::vector<std::filesystem::path> emit_outputs(const std::vector<RunRecord>& records,
                                                       const std::filesystem::path& dir,
                                                       OutputFormat format, bool plotdata,
                                                       const EmitOptions& opt = {}) {
  if (records.empty()) throw DomainError("emit_outputs: no records");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  std::vector<std::filesystem::path> written;
  if (format == OutputFormat::Csv) {
    written.push_back(dir / "summary.csv");
    detail::write_text(written.back(), records_to_csv(records, opt));
  } else {
    written.push_back(dir / "summary.json");
    detail::write_text(written.back(), records_to_json(records, opt));
  }
  if (!plotdata) return written;
  for (const auto& [key, figure] : group_figures(records)) {
    written.push_back(dir / ("series_" + key.stem() + ".csv"));
    detail::write_text(written.back(), series_csv(figure));
    written.push_back(dir / ("ratios_" + key.stem() + ".csv"));
    detail::write_text(written.back(), ratios_csv(figure_comparisons(figure)));
  }
  return written;
}

/// Appends one JSON line per record and flushes, so an interrupted sweep
/// keeps every finished cell.
class JsonlWriter {
 public:
  explicit JsonlWriter(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot open '" + path.string() + "' for writing");
  }
  void operator()(const RunRecord& r) {
    out_ << record_to_json(r).dump() << '\n';
    out_.flush();
    if (!out_) throw IoError("write failed for '" + path_.string() + "'");
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

}  // namespace eot
