#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"
#include "slalom/alignment.hpp"
#include "slalom/categories.hpp"
#include "slalom/config.hpp"
#include "slalom/embedding.hpp"
#include "slalom/gates.hpp"
#include "slalom/groundtruth.hpp"
#include "slalom/metrics.hpp"
#include "slalom/trace.hpp"

namespace slalom {

// ---------------------------------------------------------------------------
// Display rounding: fixed decimals, ties to even.

inline double round_half_even(double x, int decimals = 3) {
  const double scale = std::pow(10.0, decimals);
  const double scaled = x * scale;
  const double floor = std::floor(scaled);
  const double frac = scaled - floor;
  double r;
  if (std::abs(frac - 0.5) < 1e-9) {
    r = std::fmod(floor, 2.0) == 0.0 ? floor : floor + 1.0;
  } else {
    r = std::round(scaled);
  }
  return r / scale;
}

inline std::string format_fixed(double x, int decimals = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, round_half_even(x, decimals));
  return buf;
}

// ---------------------------------------------------------------------------
// Parallel map with deterministic output order.

template <typename Fn>
auto parallel_map(std::size_t n, std::size_t workers, Fn fn)
    -> std::vector<decltype(fn(std::size_t{}))> {
  using R = decltype(fn(std::size_t{}));
  std::vector<std::optional<R>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto run = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    run();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<R> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

// ---------------------------------------------------------------------------
// Extraction

// Resources the metric stage needs, built once from a config.
class MetricContext {
 public:
  explicit MetricContext(const PipelineConfig& config)
      : provider_(config.embedding_dim, config.embedding_seed) {
    if (!config.categories.empty()) {
      std::ifstream in(config.categories);
      if (!in) throw InputError("cannot open category table '" + config.categories + "'");
      custom_ = std::make_unique<CategoryTable>(CategoryTable::parse(in));
    }
  }

  const EmbeddingProvider& provider() const { return provider_; }
  const CategoryTable& categories() const { return custom_ ? *custom_ : default_categories(); }

 private:
  HashedEmbeddingProvider provider_;
  std::unique_ptr<CategoryTable> custom_;
};

// Raw log -> trajectory: split into sessions by segment, concatenate with
// trimming, rescale to [0, 100], bin, and compute every configured metric.
inline Trajectory extract_from_log(const Trace& log, const PipelineConfig& config,
                                   const MetricContext& context) {
  const auto joined = concatenate_sessions(split_sessions(log), config.trim_fraction, config.trim());
  const auto binned = bin_trace(normalize_timeline(joined), config.bins);
  const auto ids = config.metric_ids();
  return extract_trajectory(binned, std::span<const MetricId>(ids), context.provider(),
                            config.fill_policy(), context.categories());
}

inline std::vector<GateBand> build_bands(const std::vector<Trajectory>& trajectories,
                                         const PipelineConfig& config) {
  std::vector<GateBand> bands;
  for (const auto& id : config.metric_ids()) {
    auto band = build_band(trajectories, id, config.multiplier, config.sigma_floor);
    band.provenance.config_hash = config_hash(config);
    bands.push_back(std::move(band));
  }
  return bands;
}

// Gates per config: derived from the bands over the Tuckman windows, read
// from gate_file, or the fixed Tuckman centres.
inline std::vector<Gate> resolve_gates(const PipelineConfig& config, const std::vector<GateBand>& bands) {
  if (config.gate_source == "tuckman") {
    return default_tuckman_gates(config.gate_value_half_width, config.gate_window_half_width);
  }
  if (config.gate_source == "file") {
    std::ifstream in(config.gate_file);
    if (!in) throw InputError("cannot open gate file '" + config.gate_file + "'");
    try {
      return gates_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError("gate file '" + config.gate_file + "': " + e.what());
    }
  }
  return tuckman_gates_from_bands(bands, config.gate_window_half_width);
}

// ---------------------------------------------------------------------------
// Scoring

struct TraceResult {
  std::string trace_id;
  GateEvaluation gates;
  std::optional<ValidityScore> score;  // absent when pruned

  bool pruned() const noexcept { return gates.pruned; }
};

struct PlotData {
  MetricId metric;
  std::vector<double> lower;
  std::vector<double> mu;
  std::vector<double> upper;
  std::vector<std::pair<std::string, std::vector<double>>> trajectories;
};

struct ValidityReport {
  std::string config_hash;
  std::vector<MetricId> metrics;
  std::vector<GateBand> bands;
  std::vector<Gate> gates;
  std::vector<TraceResult> results;
  std::vector<PlotData> plots;
};

// The band centres as one target trajectory.
inline Trajectory target_from_bands(const std::vector<GateBand>& bands) {
  if (bands.empty()) throw ValidationError("no bands to build a target from");
  Trajectory t;
  t.trace_id = "ground_truth";
  t.bin_count = bands.front().bins();
  for (std::size_t b = 0; b < t.bin_count; ++b) t.bin_ids.push_back(b);
  for (const auto& band : bands) {
    if (band.bins() != t.bin_count) throw ValidationError("bands disagree on bin count");
    t.series.push_back(band_mean_series(band));
  }
  return t;
}

// Gates every trajectory, then scores the survivors against the band centres.
// In "diagnostic" gate mode verdicts are reported but nothing is pruned.
inline ValidityReport score_simulations(const std::vector<Trajectory>& sims,
                                        const std::vector<GateBand>& bands,
                                        const std::vector<Gate>& gates,
                                        const PipelineConfig& config) {
  ValidityReport report;
  report.config_hash = config_hash(config);
  report.metrics = config.metric_ids();
  report.gates = gates;
  for (const auto& id : report.metrics) {
    auto it = std::find_if(bands.begin(), bands.end(), [&](const GateBand& b) { return b.metric == id; });
    if (it == bands.end()) throw ValidationError("no band for metric '" + id.key() + "'");
    report.bands.push_back(*it);
  }
  const auto target = target_from_bands(report.bands);
  const auto weights = config.weights_for(report.metrics);
  const auto stat = parse_window_stat(config.window_stat);
  const auto delta = local_distance(config.delta);
  const bool prune = config.gate_mode == "prune";

  report.results = parallel_map(sims.size(), config.workers, [&](std::size_t i) {
    const auto& sim = sims[i];
    for (const auto& s : sim.series) {
      if (std::find(report.metrics.begin(), report.metrics.end(), s.metric) == report.metrics.end()) {
        throw ValidationError("trajectory '" + sim.trace_id + "' has unconfigured metric '" +
                              s.metric.key() + "'");
      }
    }
    // Re-order to the configured metric order so weights line up.
    Trajectory ordered = sim;
    ordered.series.clear();
    for (const auto& id : report.metrics) ordered.series.push_back(sim.at(id));

    TraceResult r;
    r.trace_id = sim.trace_id;
    r.gates = evaluate_gates(ordered, gates, stat);
    if (!prune) r.gates.pruned = false;
    if (!r.pruned()) {
      r.score = score_trajectory(ordered, target, weights, delta, config.dtw_options());
    }
    return r;
  });

  for (const auto& band : report.bands) {
    PlotData p;
    p.metric = band.metric;
    p.mu = band.mu;
    for (std::size_t b = 0; b < band.bins(); ++b) {
      p.lower.push_back(band.lower(b));
      p.upper.push_back(band.upper(b));
    }
    for (const auto& sim : sims) {
      std::vector<double> values(band.bins(), std::nan(""));
      const auto& s = sim.at(band.metric);
      if (sim.bin_count == band.bins()) {
        for (std::size_t i = 0; i < sim.size(); ++i) values[sim.bin_ids[i]] = s.values[i];
      }
      p.trajectories.emplace_back(sim.trace_id, std::move(values));
    }
    report.plots.push_back(std::move(p));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Report serialization

// Rounded figures shared by the JSON "display" block and the CSV table.
inline std::vector<std::pair<std::string, double>> display_row(const TraceResult& r,
                                                               const std::vector<MetricId>& metrics) {
  std::vector<std::pair<std::string, double>> row;
  if (!r.score) return row;
  for (const auto& id : metrics) {
    row.emplace_back(id.key(), round_half_even(r.score->find(id)->normalized_cost));
  }
  row.emplace_back("total", round_half_even(r.score->total));
  return row;
}

inline nlohmann::ordered_json to_json(const ValidityReport& report) {
  nlohmann::ordered_json j;
  j["config_hash"] = report.config_hash;
  auto& metrics = j["metrics"] = nlohmann::ordered_json::array();
  for (const auto& m : report.metrics) metrics.push_back(m.key());

  auto& bands = j["bands"] = nlohmann::ordered_json::array();
  for (const auto& b : report.bands) {
    bands.push_back({{"metric", b.metric.key()},
                     {"B", b.bins()},
                     {"n_traces", b.n_traces},
                     {"source_hash", b.provenance.source_hash},
                     {"config_hash", b.provenance.config_hash}});
  }
  j["gates"] = to_json(report.gates);

  auto& traces = j["traces"] = nlohmann::ordered_json::array();
  for (const auto& r : report.results) {
    nlohmann::ordered_json jt;
    jt["trace_id"] = r.trace_id;
    jt["pruned"] = r.pruned();
    auto& verdicts = jt["verdicts"] = nlohmann::ordered_json::array();
    for (const auto& v : r.gates.verdicts) {
      verdicts.push_back({{"gate", v.gate.name},
                          {"metric", v.gate.metric.key()},
                          {"observed", v.observed},
                          {"v_min", v.gate.v_min},
                          {"v_max", v.gate.v_max},
                          {"passed", v.passed}});
    }
    jt["failed_gates"] = r.gates.failed();
    if (r.score) {
      jt["score"] = to_json(*r.score, r.trace_id);
      auto& display = jt["display"] = nlohmann::ordered_json::object();
      for (const auto& [k, v] : display_row(r, report.metrics)) display[k] = v;
    } else {
      jt["score"] = nullptr;
    }
    traces.push_back(std::move(jt));
  }

  auto& plots = j["plots"] = nlohmann::ordered_json::array();
  for (const auto& p : report.plots) {
    nlohmann::ordered_json jp;
    jp["metric"] = p.metric.key();
    jp["band_lower"] = p.lower;
    jp["band_mu"] = p.mu;
    jp["band_upper"] = p.upper;
    auto& sims = jp["trajectories"] = nlohmann::ordered_json::array();
    for (const auto& [id, values] : p.trajectories) {
      auto jv = nlohmann::ordered_json::array();
      for (double v : values) jv.push_back(std::isnan(v) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(v));
      sims.push_back({{"trace_id", id}, {"values", std::move(jv)}});
    }
    plots.push_back(std::move(jp));
  }
  return j;
}

// One row per trace: Sim, <metric titles...>, Total. A pruned trace's row is
// "PRUNED(gate:metric; ...)" in place of the numbers.
inline void write_table_csv(std::ostream& out, const ValidityReport& report) {
  out << "Sim";
  for (const auto& m : report.metrics) out << ',' << m.title();
  out << ",Total\n";
  for (const auto& r : report.results) {
    out << r.trace_id;
    if (!r.score) {
      std::string names;
      for (const auto& n : r.gates.failed()) names += (names.empty() ? "" : "; ") + n;
      out << ",PRUNED(" << names << ")\n";
      continue;
    }
    for (const auto& [key, value] : display_row(r, report.metrics)) out << ',' << format_fixed(value);
    out << '\n';
  }
}

// Band-and-trajectory plot data from a serialized report: per metric, columns
// bin, band_lower, band_mu, band_upper, then one column per trajectory.
inline std::map<std::string, std::string> plot_csvs(const nlohmann::json& report) {
  std::map<std::string, std::string> out;
  try {
    for (const auto& p : report.at("plots")) {
      std::ostringstream csv;
      const auto lower = p.at("band_lower").get<std::vector<double>>();
      const auto mu = p.at("band_mu").get<std::vector<double>>();
      const auto upper = p.at("band_upper").get<std::vector<double>>();
      const auto& sims = p.at("trajectories");
      csv << "bin,band_lower,band_mu,band_upper";
      for (const auto& s : sims) csv << ',' << s.at("trace_id").get<std::string>();
      csv << '\n';
      for (std::size_t b = 0; b < mu.size(); ++b) {
        csv << b << ',' << format_number(lower.at(b)) << ',' << format_number(mu[b]) << ','
            << format_number(upper.at(b));
        for (const auto& s : sims) {
          const auto& v = s.at("values").at(b);
          csv << ',' << (v.is_null() ? std::string() : format_number(v.get<double>()));
        }
        csv << '\n';
      }
      out[p.at("metric").get<std::string>()] = csv.str();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad report document: ") + e.what());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Atomic file output

inline void write_file_atomic(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp + "'");
    out << contents;
    if (!out.flush()) throw Error("failed writing '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw Error("cannot rename '" + tmp + "' to '" + path + "'");
  }
}

}  // namespace slalom
