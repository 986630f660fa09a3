#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "slalom/alignment.hpp"
#include "slalom/error.hpp"
#include "slalom/gates.hpp"
#include "slalom/groundtruth.hpp"
#include "slalom/hash.hpp"
#include "slalom/metrics.hpp"
#include "slalom/trace.hpp"

namespace slalom {

// Every pipeline knob, as one flat JSON document. Defaults: B = 100 bins,
// 5% trim of sessions 2..n, +/-2 sigma bands, unit weights.
struct PipelineConfig {
  std::size_t bins = 100;
  double trim_fraction = 0.05;
  std::string trim_policy = "all_but_first";  // all_but_first | all | none
  double multiplier = kDefaultBandMultiplier;
  double sigma_floor = kDefaultSigmaFloor;
  std::vector<std::string> metrics = {"hierarchy", "divergence", "cohesion"};
  std::string fill = "linear";     // linear | hold_last | drop_bin
  std::string gate_source = "band";  // band | file | tuckman
  std::string gate_file;
  double gate_value_half_width = kDefaultValueHalfWidth;
  double gate_window_half_width = kDefaultWindowHalfWidth;
  std::string gate_mode = "prune";  // prune | diagnostic
  std::string window_stat = "mean";
  std::map<std::string, double> weights;  // metric -> weight, missing = 1
  std::string delta = "absolute";          // absolute | squared
  std::optional<std::size_t> dtw_window;
  std::string embedding = "hashed";
  std::size_t embedding_dim = 256;
  std::uint64_t embedding_seed = 0;
  std::string categories;  // category table path; empty = built-in
  std::uint64_t seed = 7;
  std::size_t workers = 1;

  std::vector<MetricId> metric_ids() const {
    std::vector<MetricId> ids;
    for (const auto& m : metrics) ids.emplace_back(m);
    return ids;
  }

  std::vector<double> weights_for(const std::vector<MetricId>& ids) const {
    std::vector<double> w;
    for (const auto& id : ids) {
      auto it = weights.find(id.key());
      w.push_back(it == weights.end() ? 1.0 : it->second);
    }
    return w;
  }

  TrimPolicy trim() const {
    if (trim_policy == "all_but_first") return TrimPolicy::kAllButFirst;
    if (trim_policy == "all") return TrimPolicy::kAll;
    if (trim_policy == "none") return TrimPolicy::kNone;
    throw ValidationError("unknown trim_policy '" + trim_policy + "'");
  }

  FillPolicy fill_policy() const {
    if (fill == "linear") return FillPolicy::kLinear;
    if (fill == "hold_last") return FillPolicy::kHoldLast;
    if (fill == "drop_bin") return FillPolicy::kDropBin;
    throw ValidationError("unknown fill policy '" + fill + "'");
  }

  DtwOptions dtw_options() const { return {dtw_window}; }

  void validate() const {
    if (bins == 0) throw ValidationError("bins must be positive");
    if (!(trim_fraction >= 0.0 && trim_fraction < 0.5)) {
      throw ValidationError("trim_fraction must lie in [0, 0.5)");
    }
    if (!(multiplier > 0.0)) throw ValidationError("multiplier must be positive");
    if (!(sigma_floor >= 0.0)) throw ValidationError("sigma_floor must be non-negative");
    if (metrics.empty()) throw ValidationError("metrics must not be empty");
    if (std::set<std::string>(metrics.begin(), metrics.end()).size() != metrics.size()) {
      throw ValidationError("metrics must be unique");
    }
    trim();
    fill_policy();
    parse_window_stat(window_stat);
    local_distance(delta);
    if (gate_source != "band" && gate_source != "file" && gate_source != "tuckman") {
      throw ValidationError("unknown gate_source '" + gate_source + "'");
    }
    if (gate_source == "file" && gate_file.empty()) {
      throw ValidationError("gate_source 'file' needs gate_file");
    }
    if (gate_mode != "prune" && gate_mode != "diagnostic") {
      throw ValidationError("unknown gate_mode '" + gate_mode + "'");
    }
    if (embedding != "hashed") throw ValidationError("unknown embedding provider '" + embedding + "'");
    if (embedding_dim < 8) throw ValidationError("embedding_dim must be at least 8");
    for (const auto& [k, w] : weights) {
      if (!(w >= 0.0)) throw ValidationError("weight for '" + k + "' must be non-negative");
    }
    if (workers == 0) throw ValidationError("workers must be positive");
  }
};

inline nlohmann::json to_json(const PipelineConfig& c) {
  nlohmann::json j;
  j["bins"] = c.bins;
  j["trim_fraction"] = c.trim_fraction;
  j["trim_policy"] = c.trim_policy;
  j["multiplier"] = c.multiplier;
  j["sigma_floor"] = c.sigma_floor;
  j["metrics"] = c.metrics;
  j["fill"] = c.fill;
  j["gate_source"] = c.gate_source;
  j["gate_file"] = c.gate_file;
  j["gate_value_half_width"] = c.gate_value_half_width;
  j["gate_window_half_width"] = c.gate_window_half_width;
  j["gate_mode"] = c.gate_mode;
  j["window_stat"] = c.window_stat;
  j["weights"] = c.weights;
  j["delta"] = c.delta;
  j["dtw_window"] = c.dtw_window ? nlohmann::json(*c.dtw_window) : nlohmann::json(nullptr);
  j["embedding"] = c.embedding;
  j["embedding_dim"] = c.embedding_dim;
  j["embedding_seed"] = c.embedding_seed;
  j["categories"] = c.categories;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  return j;
}

// Applies the keys present in `j` on top of `base`. Unknown keys are errors.
inline PipelineConfig merge_config(PipelineConfig base, const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  const auto known = to_json(base);
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ValidationError("unknown config key '" + key + "'");
  }
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) j.at(key).get_to(field);
    };
    get("bins", base.bins);
    get("trim_fraction", base.trim_fraction);
    get("trim_policy", base.trim_policy);
    get("multiplier", base.multiplier);
    get("sigma_floor", base.sigma_floor);
    get("metrics", base.metrics);
    get("fill", base.fill);
    get("gate_source", base.gate_source);
    get("gate_file", base.gate_file);
    get("gate_value_half_width", base.gate_value_half_width);
    get("gate_window_half_width", base.gate_window_half_width);
    get("gate_mode", base.gate_mode);
    get("window_stat", base.window_stat);
    get("weights", base.weights);
    get("delta", base.delta);
    if (j.contains("dtw_window")) {
      base.dtw_window = j["dtw_window"].is_null()
                            ? std::nullopt
                            : std::optional<std::size_t>(j["dtw_window"].get<std::size_t>());
    }
    get("embedding", base.embedding);
    get("embedding_dim", base.embedding_dim);
    get("embedding_seed", base.embedding_seed);
    get("categories", base.categories);
    get("seed", base.seed);
    get("workers", base.workers);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad config value: ") + e.what());
  }
  return base;
}

inline PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("config '" + path + "': " + e.what());
  }
  return merge_config(PipelineConfig{}, j);
}

// Digest of the canonical (sorted-key) config document. Worker count is
// excluded since it never changes results.
inline std::string config_hash(const PipelineConfig& c) {
  auto j = to_json(c);
  j.erase("workers");
  return hex64(fnv1a(j.dump()));
}

}  // namespace slalom
