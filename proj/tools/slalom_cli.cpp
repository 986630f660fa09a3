// slalom: batch validation of simulated interaction logs against
// ground-truth gate bands.
//
//   slalom synth --corpus 15 --out logs/
//   slalom extract logs/*.jsonl --out traj/
//   slalom groundtruth traj/*.trajectory.json --out bands/
//   slalom synth --archetype A --out sims/sim_A.trajectory.json
//   slalom score --band bands/*.json --sim sims/*.json --out-json report.json --out-csv table.csv
//   slalom report report.json --out plots/

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "slalom/slalom.hpp"

namespace fs = std::filesystem;
using namespace slalom;

namespace {

constexpr int kExitInternal = 1;
constexpr int kExitInput = 2;

// Config-mirroring flags; unset flags leave the config file value alone.
struct ConfigFlags {
  std::optional<std::size_t> bins;
  std::optional<double> trim_fraction;
  std::optional<std::string> trim_policy;
  std::optional<double> multiplier;
  std::optional<double> sigma_floor;
  std::vector<std::string> metrics;
  std::optional<std::string> fill;
  std::optional<std::string> gate_source;
  std::optional<std::string> gate_file;
  std::optional<double> gate_value_half_width;
  std::optional<double> gate_window_half_width;
  std::optional<std::string> gate_mode;
  std::optional<std::string> window_stat;
  std::vector<std::string> weights;
  std::optional<std::string> delta;
  std::optional<std::size_t> dtw_window;
  std::optional<std::string> embedding;
  std::optional<std::size_t> embedding_dim;
  std::optional<std::uint64_t> embedding_seed;
  std::optional<std::string> categories;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::string config_path;

  void attach(CLI::App& app) {
    app.add_option("--config", config_path, "Config JSON (default: $SLALOM_CONFIG)");
    app.add_option("--bins", bins, "Time bins B");
    app.add_option("--trim-fraction", trim_fraction, "Session edge trim fraction");
    app.add_option("--trim-policy", trim_policy, "all_but_first | all | none");
    app.add_option("--multiplier", multiplier, "Band half-width in sigmas");
    app.add_option("--sigma-floor", sigma_floor, "Lower bound on band sigma");
    app.add_option("--metrics", metrics, "Metric keys");
    app.add_option("--fill", fill, "linear | hold_last | drop_bin");
    app.add_option("--gate-source", gate_source, "band | file | tuckman");
    app.add_option("--gate-file", gate_file, "Gate set JSON");
    app.add_option("--gate-value-half-width", gate_value_half_width, "Tuckman gate value half-width");
    app.add_option("--gate-window-half-width", gate_window_half_width, "Gate window half-width");
    app.add_option("--gate-mode", gate_mode, "prune | diagnostic");
    app.add_option("--window-stat", window_stat, "mean | min | max");
    app.add_option("--weight", weights, "metric=weight (repeatable)");
    app.add_option("--delta", delta, "absolute | squared");
    app.add_option("--dtw-window", dtw_window, "Sakoe-Chiba radius");
    app.add_option("--embedding", embedding, "Embedding provider");
    app.add_option("--embedding-dim", embedding_dim, "Hashed embedding dimension");
    app.add_option("--embedding-seed", embedding_seed, "Hashed embedding seed");
    app.add_option("--categories", categories, "Function-word table (category<TAB>word)");
    app.add_option("--seed", seed, "Master seed for synthetic data");
    app.add_option("--workers", workers, "Worker threads");
  }

  PipelineConfig resolve() const {
    PipelineConfig c;
    std::string path = config_path;
    if (path.empty()) {
      if (const char* env = std::getenv("SLALOM_CONFIG")) path = env;
    }
    if (!path.empty()) c = load_config(path);
    if (bins) c.bins = *bins;
    if (trim_fraction) c.trim_fraction = *trim_fraction;
    if (trim_policy) c.trim_policy = *trim_policy;
    if (multiplier) c.multiplier = *multiplier;
    if (sigma_floor) c.sigma_floor = *sigma_floor;
    if (!metrics.empty()) c.metrics = metrics;
    if (fill) c.fill = *fill;
    if (gate_source) c.gate_source = *gate_source;
    if (gate_file) c.gate_file = *gate_file;
    if (gate_value_half_width) c.gate_value_half_width = *gate_value_half_width;
    if (gate_window_half_width) c.gate_window_half_width = *gate_window_half_width;
    if (gate_mode) c.gate_mode = *gate_mode;
    if (window_stat) c.window_stat = *window_stat;
    for (const auto& kv : weights) {
      auto eq = kv.find('=');
      if (eq == std::string::npos) throw ValidationError("--weight expects metric=weight, got '" + kv + "'");
      try {
        c.weights[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
      } catch (const std::exception&) {
        throw ValidationError("bad weight in '" + kv + "'");
      }
    }
    if (delta) c.delta = *delta;
    if (dtw_window) c.dtw_window = *dtw_window;
    if (embedding) c.embedding = *embedding;
    if (embedding_dim) c.embedding_dim = *embedding_dim;
    if (embedding_seed) c.embedding_seed = *embedding_seed;
    if (categories) c.categories = *categories;
    if (seed) c.seed = *seed;
    if (workers) c.workers = *workers;
    c.validate();
    return c;
  }
};

// Attributes errors to the file they came from.
class FileError : public InputError {
 public:
  using InputError::InputError;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError(path + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const std::string& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw FileError(path + ": " + e.what());
  }
}

template <typename Fn>
auto with_file(const std::string& path, Fn fn) {
  try {
    return fn();
  } catch (const FileError&) {
    throw;
  } catch (const ParseError& e) {
    throw FileError(path + ":" + std::to_string(e.line()) + ": " + e.detail());
  } catch (const InputError& e) {
    throw FileError(path + ": " + e.what());
  }
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create directory '" + dir + "': " + ec.message());
}

std::string dump(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------

int cmd_extract(const std::vector<std::string>& inputs, const std::string& out_dir,
                const PipelineConfig& config) {
  ensure_dir(out_dir);
  const MetricContext context(config);
  std::vector<Trace> logs;
  for (const auto& path : inputs) {
    logs.push_back(with_file(path, [&] {
      std::ifstream in(path);
      if (!in) throw FileError(path + ": cannot open");
      return parse_trace(in, fs::path(path).stem().string());
    }));
  }
  auto trajectories = parallel_map(logs.size(), config.workers, [&](std::size_t i) {
    return with_file(inputs[i], [&] { return extract_from_log(logs[i], config, context); });
  });
  for (const auto& t : trajectories) {
    const auto stem = (fs::path(out_dir) / t.trace_id).string();
    write_file_atomic(stem + ".trajectory.json", dump(to_json(t)));
    std::ostringstream csv;
    write_trajectory_csv(csv, t);
    write_file_atomic(stem + ".trajectory.csv", csv.str());
    std::cout << stem << ".trajectory.json\n";
  }
  return 0;
}

std::vector<Trajectory> load_trajectories(const std::vector<std::string>& paths) {
  std::vector<Trajectory> out;
  for (const auto& p : paths) {
    out.push_back(with_file(p, [&] { return trajectory_from_json(read_json(p)); }));
  }
  return out;
}

std::vector<GateBand> load_bands(const std::vector<std::string>& paths) {
  std::vector<GateBand> out;
  for (const auto& p : paths) out.push_back(with_file(p, [&] { return band_from_json(read_json(p)); }));
  return out;
}

int cmd_groundtruth(const std::vector<std::string>& inputs, const std::string& out_dir,
                    const PipelineConfig& config) {
  const auto trajectories = load_trajectories(inputs);
  const auto bands = build_bands(trajectories, config);
  ensure_dir(out_dir);
  for (const auto& band : bands) {
    const auto path = (fs::path(out_dir) / ("band_" + band.metric.key() + ".json")).string();
    write_file_atomic(path, dump(to_json(band)));
    std::cout << path << "\n";
  }
  return 0;
}

void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    write_file_atomic(out, text);
  }
}

int cmd_gates(const std::vector<std::string>& band_paths, const std::string& out,
              const PipelineConfig& config) {
  std::vector<Gate> gates;
  if (band_paths.empty()) {
    gates = default_tuckman_gates(config.gate_value_half_width, config.gate_window_half_width);
  } else {
    gates = tuckman_gates_from_bands(load_bands(band_paths), config.gate_window_half_width);
  }
  emit(out, dump(to_json(gates)));
  return 0;
}

int cmd_score(const std::vector<std::string>& sim_paths, const std::vector<std::string>& band_paths,
              const std::string& gate_path, const std::string& out_json, const std::string& out_csv,
              PipelineConfig config) {
  if (band_paths.empty()) throw ValidationError("score needs at least one --band file");
  if (!gate_path.empty()) {
    config.gate_source = "file";
    config.gate_file = gate_path;
  }
  const auto bands = load_bands(band_paths);
  const auto gates = config.gate_source == "file"
                         ? with_file(config.gate_file, [&] { return resolve_gates(config, bands); })
                         : resolve_gates(config, bands);
  const auto sims = load_trajectories(sim_paths);
  const auto report = score_simulations(sims, bands, gates, config);

  emit(out_json, dump(to_json(report)));
  if (!out_csv.empty()) {
    std::ostringstream csv;
    write_table_csv(csv, report);
    emit(out_csv, csv.str());
  }
  return 0;
}

int cmd_synth(const std::string& archetype, std::size_t corpus, std::size_t reference,
              std::optional<double> noise, const std::string& out, const PipelineConfig& config) {
  const int modes = int(!archetype.empty()) + int(corpus > 0) + int(reference > 0);
  if (modes != 1) throw ValidationError("synth needs exactly one of --archetype, --corpus, --reference");
  if (!archetype.empty()) {
    auto a = make_archetype(parse_archetype(archetype), noise.value_or(kDefaultArchetypeNoise), config.seed);
    emit(out, dump(to_json(generate(a, config.bins))));
    return 0;
  }
  if (out.empty()) throw ValidationError("synth --corpus/--reference needs --out DIR");
  ensure_dir(out);
  if (corpus > 0) {
    for (const auto& trace : demo_corpus(corpus, config.seed)) {
      std::ostringstream ss;
      write_trace_jsonl(ss, trace);
      const auto path = (fs::path(out) / (trace.trace_id + ".jsonl")).string();
      write_file_atomic(path, ss.str());
      std::cout << path << "\n";
    }
  } else {
    for (const auto& t : reference_ensemble(reference, config.seed, config.bins)) {
      const auto path = (fs::path(out) / (t.trace_id + ".trajectory.json")).string();
      write_file_atomic(path, dump(to_json(t)));
      std::cout << path << "\n";
    }
  }
  return 0;
}

int cmd_report(const std::string& report_path, const std::string& out_dir) {
  const auto csvs = with_file(report_path, [&] { return plot_csvs(read_json(report_path)); });
  ensure_dir(out_dir);
  for (const auto& [metric, csv] : csvs) {
    const auto path = (fs::path(out_dir) / ("plot_" + metric + ".csv")).string();
    write_file_atomic(path, csv);
    std::cout << path << "\n";
  }
  return 0;
}

int cmd_dump_categories(const PipelineConfig& config) {
  const MetricContext context(config);
  context.categories().dump(std::cout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trajectory validation for agent-based social simulations"};
  app.require_subcommand(1);
  ConfigFlags flags;

  std::vector<std::string> extract_inputs;
  std::string extract_out = ".";
  auto* extract = app.add_subcommand("extract", "Interaction logs (JSON-Lines) -> trajectory files");
  extract->add_option("logs", extract_inputs, "Log files")->required();
  extract->add_option("--out", extract_out, "Output directory");
  flags.attach(*extract);

  std::vector<std::string> gt_inputs;
  std::string gt_out = ".";
  auto* groundtruth = app.add_subcommand("groundtruth", "Trajectories -> per-metric band files");
  groundtruth->add_option("trajectories", gt_inputs, "Trajectory JSON files")->required();
  groundtruth->add_option("--out", gt_out, "Output directory");
  flags.attach(*groundtruth);

  std::vector<std::string> gates_bands;
  std::string gates_out;
  auto* gates = app.add_subcommand("gates", "Emit the default Tuckman gate set, or derive gates from bands");
  gates->add_option("--band", gates_bands, "Band files to derive gates from");
  gates->add_option("--out", gates_out, "Output file (default stdout)");
  flags.attach(*gates);

  std::vector<std::string> score_sims, score_bands;
  std::string score_gates, score_json, score_csv;
  auto* score = app.add_subcommand("score", "Gate and score simulated trajectories");
  score->add_option("--sim", score_sims, "Simulated trajectory files");
  score->add_option("--band", score_bands, "Band files")->required();
  score->add_option("--gates", score_gates, "Gate set file (overrides gate_source)");
  score->add_option("--out-json", score_json, "Report JSON (default stdout)");
  score->add_option("--out-csv", score_csv, "Table CSV");
  flags.attach(*score);

  std::string synth_archetype, synth_out;
  std::size_t synth_corpus = 0, synth_reference = 0;
  std::optional<double> synth_noise;
  auto* synth = app.add_subcommand("synth", "Generate archetype trajectories or a demo corpus");
  synth->add_option("--archetype", synth_archetype, "A | B | C");
  synth->add_option("--noise", synth_noise, "Per-bin noise sigma for --archetype");
  synth->add_option("--corpus", synth_corpus, "Number of demo groups (JSON-Lines logs)");
  synth->add_option("--reference", synth_reference, "Number of reference trajectories");
  synth->add_option("--out", synth_out, "Output file or directory");
  flags.attach(*synth);

  std::string report_input, report_out = ".";
  auto* report = app.add_subcommand("report", "Report JSON -> per-metric plot CSVs");
  report->add_option("report", report_input, "Report JSON")->required();
  report->add_option("--out", report_out, "Output directory");

  auto* dump_categories = app.add_subcommand("dump-categories", "Print the function-word table");
  flags.attach(*dump_categories);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    if (*report) return cmd_report(report_input, report_out);
    const auto config = flags.resolve();
    if (*extract) return cmd_extract(extract_inputs, extract_out, config);
    if (*groundtruth) return cmd_groundtruth(gt_inputs, gt_out, config);
    if (*gates) return cmd_gates(gates_bands, gates_out, config);
    if (*score) return cmd_score(score_sims, score_bands, score_gates, score_json, score_csv, config);
    if (*synth) return cmd_synth(synth_archetype, synth_corpus, synth_reference, synth_noise, synth_out, config);
    if (*dump_categories) return cmd_dump_categories(config);
  } catch (const InputError& e) {
    std::cerr << "slalom: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "slalom: internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}
