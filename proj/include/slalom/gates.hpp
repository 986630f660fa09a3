#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"
#include "slalom/error.hpp"
#include "slalom/groundtruth.hpp"
#include "slalom/metrics.hpp"

namespace slalom {

// A waypoint constraint: over normalized time [t_min, t_max], the window
// statistic of `metric` must lie in [v_min, v_max].
struct Gate {
  std::string name;
  MetricId metric;
  double t_min = 0.0;
  double t_max = 100.0;
  double v_min = 0.0;
  double v_max = 1.0;

  friend bool operator==(const Gate&, const Gate&) = default;
};

struct TimeWindow {
  std::string name;
  double t_min = 0.0;
  double t_max = 0.0;
};

enum class WindowStat { kMean, kMin, kMax };

struct GateVerdict {
  Gate gate;
  double observed = 0.0;
  bool passed = false;
};

struct GateEvaluation {
  std::vector<GateVerdict> verdicts;
  bool pruned = false;

  std::vector<std::string> failed() const {
    std::vector<std::string> names;
    for (const auto& v : verdicts) {
      if (!v.passed) names.push_back(v.gate.name + ":" + v.gate.metric.key());
    }
    return names;
  }
};

inline void validate_gate(const Gate& g) {
  if (!(g.v_min <= g.v_max)) {
    throw ValidationError("gate '" + g.name + "': v_min exceeds v_max");
  }
  if (!(0.0 <= g.t_min && g.t_min <= g.t_max && g.t_max <= 100.0)) {
    throw ValidationError("gate '" + g.name + "': window must be a non-empty interval in [0, 100]");
  }
}

// Bins of a B-bin grid that overlap [t_min, t_max] with positive length. A
// point window selects the bin containing it. Empty when the window lies
// off the grid.
inline std::vector<std::size_t> bins_in_window(std::size_t bin_count, double t_min,
                                               double t_max) {
  std::vector<std::size_t> out;
  if (bin_count == 0 || t_max < t_min || t_max < 0.0 || t_min > 100.0) return out;
  if (t_min == t_max) {
    out.push_back(bin_index(t_min, bin_count));
    return out;
  }
  const double width = 100.0 / static_cast<double>(bin_count);
  for (std::size_t b = 0; b < bin_count; ++b) {
    const double lo = std::max(static_cast<double>(b) * width, t_min);
    const double hi = std::min(static_cast<double>(b + 1) * width, t_max);
    if (lo < hi) out.push_back(b);
  }
  return out;
}

// One gate per window: v_min is the lowest band lower edge and v_max the
// highest upper edge over the bins the window touches.
inline std::vector<Gate> gates_from_band(const GateBand& band,
                                         const std::vector<TimeWindow>& windows) {
  std::vector<Gate> gates;
  for (const auto& w : windows) {
    const auto bins = bins_in_window(band.bins(), w.t_min, w.t_max);
    if (bins.empty() || w.t_min < 0.0 || w.t_max > 100.0) {
      throw ValidationError("window '" + w.name + "' does not intersect the band's bins");
    }
    Gate g{w.name, band.metric, w.t_min, w.t_max,
           std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (std::size_t b : bins) {
      g.v_min = std::min(g.v_min, band.lower(b));
      g.v_max = std::max(g.v_max, band.upper(b));
    }
    gates.push_back(std::move(g));
  }
  return gates;
}

// ---------------------------------------------------------------------------
// Tuckman defaults

struct TuckmanCenter {
  const char* phase;
  double t;  // percent timeline
  MetricId metric;
  double value;
};

inline std::vector<TuckmanCenter> tuckman_centers() {
  const auto G = MetricId::hierarchy();
  const auto D = MetricId::divergence();
  const auto L = MetricId::cohesion();
  return {
      {"Forming", 25.0, G, 0.48},    {"Forming", 25.0, D, 0.3},
      {"Storming", 45.0, G, 0.37},   {"Storming", 45.0, L, 0.4},
      {"Norming", 70.0, L, 0.5},     {"Norming", 70.0, G, 0.32},
      {"Performing", 98.0, L, 0.42}, {"Performing", 98.0, G, 0.35},
  };
}

inline constexpr double kDefaultWindowHalfWidth = 5.0;
inline constexpr double kDefaultValueHalfWidth = 0.1;

// The four phase windows, centred on the phase times and clipped to [0, 100].
inline std::vector<TimeWindow> tuckman_windows(double half_width = kDefaultWindowHalfWidth) {
  std::vector<TimeWindow> windows;
  for (const auto& c : tuckman_centers()) {
    if (!windows.empty() && windows.back().name == c.phase) continue;
    windows.push_back({c.phase, std::max(0.0, c.t - half_width),
                       std::min(100.0, c.t + half_width)});
  }
  return windows;
}

inline std::vector<Gate> default_tuckman_gates(double value_half_width = kDefaultValueHalfWidth,
                                               double window_half_width = kDefaultWindowHalfWidth) {
  std::vector<Gate> gates;
  for (const auto& c : tuckman_centers()) {
    gates.push_back({c.phase, c.metric, std::max(0.0, c.t - window_half_width),
                     std::min(100.0, c.t + window_half_width), c.value - value_half_width,
                     c.value + value_half_width});
  }
  return gates;
}

// Band-derived gates over the Tuckman windows for every band: 4 per metric.
inline std::vector<Gate> tuckman_gates_from_bands(const std::vector<GateBand>& bands,
                                                  double window_half_width = kDefaultWindowHalfWidth) {
  std::vector<Gate> gates;
  const auto windows = tuckman_windows(window_half_width);
  for (const auto& band : bands) {
    auto g = gates_from_band(band, windows);
    gates.insert(gates.end(), g.begin(), g.end());
  }
  std::stable_sort(gates.begin(), gates.end(), [&](const Gate& a, const Gate& b) {
    auto rank = [&](const Gate& g) {
      for (std::size_t i = 0; i < windows.size(); ++i) {
        if (windows[i].name == g.name) return i;
      }
      return windows.size();
    };
    return rank(a) < rank(b);
  });
  return gates;
}

// ---------------------------------------------------------------------------
// Evaluation

// Summary of a trajectory's values over the bins a gate window touches.
inline double window_statistic(const Trajectory& trajectory, const Gate& gate,
                               WindowStat stat = WindowStat::kMean) {
  const auto& series = trajectory.at(gate.metric);
  const auto window = bins_in_window(trajectory.bin_count, gate.t_min, gate.t_max);
  double sum = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  std::size_t n = 0;
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    if (!std::binary_search(window.begin(), window.end(), trajectory.bin_ids[i])) continue;
    const double v = series.values[i];
    sum += v;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    ++n;
  }
  if (n == 0) {
    throw ValidationError("trajectory '" + trajectory.trace_id + "' has no bins in window of gate '" +
                          gate.name + "'");
  }
  switch (stat) {
    case WindowStat::kMin: return lo;
    case WindowStat::kMax: return hi;
    case WindowStat::kMean: break;
  }
  return sum / static_cast<double>(n);
}

// Evaluates every gate (no short-circuit); pruned when any gate fails.
inline GateEvaluation evaluate_gates(const Trajectory& trajectory, const std::vector<Gate>& gates,
                                     WindowStat stat = WindowStat::kMean) {
  for (const auto& g : gates) {
    if (!trajectory.find(g.metric)) {
      throw ValidationError("gate '" + g.name + "' references metric '" + g.metric.key() +
                            "' absent from trajectory '" + trajectory.trace_id + "'");
    }
  }
  GateEvaluation out;
  out.verdicts.reserve(gates.size());
  for (const auto& g : gates) {
    const double observed = window_statistic(trajectory, g, stat);
    const bool passed = g.v_min <= observed && observed <= g.v_max;
    out.verdicts.push_back({g, observed, passed});
    out.pruned = out.pruned || !passed;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gate set files: [{name, metric, t_min, t_max, v_min, v_max}, ...]

inline nlohmann::ordered_json to_json(const Gate& g) {
  nlohmann::ordered_json j;
  j["name"] = g.name;
  j["metric"] = g.metric.key();
  j["t_min"] = g.t_min;
  j["t_max"] = g.t_max;
  j["v_min"] = g.v_min;
  j["v_max"] = g.v_max;
  return j;
}

inline nlohmann::ordered_json to_json(const std::vector<Gate>& gates) {
  auto j = nlohmann::ordered_json::array();
  for (const auto& g : gates) j.push_back(to_json(g));
  return j;
}

inline std::vector<Gate> gates_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ValidationError("gate set must be a JSON array");
  std::vector<Gate> gates;
  try {
    for (const auto& jg : j) {
      Gate g{jg.at("name").get<std::string>(), MetricId(jg.at("metric").get<std::string>()),
             jg.at("t_min").get<double>(),     jg.at("t_max").get<double>(),
             jg.at("v_min").get<double>(),     jg.at("v_max").get<double>()};
      validate_gate(g);
      gates.push_back(std::move(g));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad gate document: ") + e.what());
  }
  return gates;
}

inline WindowStat parse_window_stat(const std::string& s) {
  if (s == "mean") return WindowStat::kMean;
  if (s == "min") return WindowStat::kMin;
  if (s == "max") return WindowStat::kMax;
  throw ValidationError("unknown window statistic '" + s + "'");
}

}  // namespace slalom
