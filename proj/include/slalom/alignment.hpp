#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "slalom/error.hpp"
#include "slalom/metrics.hpp"

namespace slalom {

struct AbsoluteDistance {
  double operator()(double a, double b) const noexcept { return std::abs(a - b); }
};

struct SquaredDistance {
  double operator()(double a, double b) const noexcept { return (a - b) * (a - b); }
};

using LocalDistance = std::function<double(double, double)>;

inline LocalDistance local_distance(const std::string& name) {
  if (name == "absolute") return AbsoluteDistance{};
  if (name == "squared") return SquaredDistance{};
  throw ValidationError("unknown local distance '" + name + "'");
}

struct WarpingPath {
  std::vector<std::pair<std::size_t, std::size_t>> steps;

  std::size_t length() const noexcept { return steps.size(); }
};

struct AlignmentResult {
  MetricId metric;
  double raw_cost = 0.0;
  double normalized_cost = 0.0;  // raw_cost / path length
  WarpingPath path;
};

struct DtwOptions {
  // Sakoe-Chiba radius in cells; nullopt leaves the alignment unconstrained.
  // The radius is widened to |len(S) - len(T)| so the end cell stays reachable.
  std::optional<std::size_t> window;
};

// Dynamic time warping over all monotone, continuous paths from (0, 0) to
// (|S|-1, |T|-1). The returned path is recovered by backtracking; among equal
// predecessors the diagonal wins, then the step that advanced i.
template <typename Delta = AbsoluteDistance>
AlignmentResult dtw(std::span<const double> s, std::span<const double> t, Delta delta = {},
                    DtwOptions options = {}) {
  if (s.empty() || t.empty()) throw ValidationError("dtw needs non-empty sequences");
  const std::size_t n = s.size();
  const std::size_t m = t.size();
  constexpr double kInf = std::numeric_limits<double>::infinity();

  std::size_t radius = std::max(n, m);
  if (options.window) radius = std::max(*options.window, n > m ? n - m : m - n);
  auto in_band = [&](std::size_t i, std::size_t j) {
    return (i > j ? i - j : j - i) <= radius;
  };

  std::vector<double> cost(n * m, kInf);
  auto at = [&](std::size_t i, std::size_t j) -> double& { return cost[i * m + j]; };

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (!in_band(i, j)) continue;
      double best;
      if (i == 0 && j == 0) {
        best = 0.0;
      } else {
        best = kInf;
        if (i > 0 && j > 0) best = std::min(best, at(i - 1, j - 1));
        if (i > 0) best = std::min(best, at(i - 1, j));
        if (j > 0) best = std::min(best, at(i, j - 1));
      }
      at(i, j) = best + static_cast<double>(delta(s[i], t[j]));
    }
  }

  AlignmentResult result;
  result.raw_cost = at(n - 1, m - 1);
  auto& steps = result.path.steps;
  std::size_t i = n - 1;
  std::size_t j = m - 1;
  steps.emplace_back(i, j);
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const double diag = at(i - 1, j - 1);
      const double up = at(i - 1, j);
      const double left = at(i, j - 1);
      if (diag <= up && diag <= left) {
        --i;
        --j;
      } else if (up <= left) {
        --i;
      } else {
        --j;
      }
    } else if (i > 0) {
      --i;
    } else {
      --j;
    }
    steps.emplace_back(i, j);
  }
  std::reverse(steps.begin(), steps.end());
  result.normalized_cost = result.raw_cost / static_cast<double>(steps.size());
  return result;
}

inline constexpr std::size_t kOracleCellLimit = 36;

// Minimum path cost by enumerating every monotone, continuous warping path.
// Exponential; for verification on small inputs only.
template <typename Delta = AbsoluteDistance>
double dtw_oracle(std::span<const double> s, std::span<const double> t, Delta delta = {}) {
  if (s.empty() || t.empty()) throw ValidationError("dtw_oracle needs non-empty sequences");
  if (s.size() * t.size() > kOracleCellLimit) {
    throw ValidationError("dtw_oracle is limited to |S|*|T| <= 36");
  }
  double best = std::numeric_limits<double>::infinity();
  // Costs accumulate forward along the path, one step at a time.
  std::function<void(std::size_t, std::size_t, double)> walk =
      [&](std::size_t i, std::size_t j, double acc) {
        acc = acc + static_cast<double>(delta(s[i], t[j]));
        if (i + 1 == s.size() && j + 1 == t.size()) {
          best = std::min(best, acc);
          return;
        }
        if (i + 1 < s.size()) walk(i + 1, j, acc);
        if (j + 1 < t.size()) walk(i, j + 1, acc);
        if (i + 1 < s.size() && j + 1 < t.size()) walk(i + 1, j + 1, acc);
      };
  walk(0, 0, 0.0);
  return best;
}

// ---------------------------------------------------------------------------
// Aggregation

struct ValidityScore {
  std::vector<AlignmentResult> per_dimension;
  std::vector<double> weights;
  double total = 0.0;

  const AlignmentResult* find(const MetricId& metric) const {
    for (const auto& r : per_dimension) {
      if (r.metric == metric) return &r;
    }
    return nullptr;
  }
};

inline constexpr double kDecompositionTolerance = 1e-9;

// total = sum_k weight_k * normalized_cost_k. Empty weights mean all ones.
inline ValidityScore aggregate(std::vector<AlignmentResult> results, std::vector<double> weights = {}) {
  if (weights.empty()) weights.assign(results.size(), 1.0);
  if (weights.size() != results.size()) {
    throw ValidationError("got " + std::to_string(weights.size()) + " weights for " +
                          std::to_string(results.size()) + " dimensions");
  }
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("weights must be non-negative");
  }
  ValidityScore score;
  for (std::size_t k = 0; k < results.size(); ++k) {
    score.total += weights[k] * results[k].normalized_cost;
  }
  score.per_dimension = std::move(results);
  score.weights = std::move(weights);

  double check = 0.0;
  for (std::size_t k = 0; k < score.weights.size(); ++k) {
    check += score.weights[k] * score.per_dimension[k].normalized_cost;
  }
  if (std::abs(check - score.total) > kDecompositionTolerance) {
    throw Error("validity score does not decompose into its parts");
  }
  return score;
}

// Aligns each metric of `sim` against the same metric of `target`
// independently, then aggregates in sim's metric order. `weights` is indexed
// like sim.series; empty means unit weights.
template <typename Delta = AbsoluteDistance>
ValidityScore score_trajectory(const Trajectory& sim, const Trajectory& target,
                               const std::vector<double>& weights = {}, Delta delta = {},
                               DtwOptions options = {}) {
  std::string missing;
  for (const auto& s : sim.series) {
    if (!target.find(s.metric)) missing += (missing.empty() ? "" : ", ") + s.metric.key();
  }
  for (const auto& s : target.series) {
    if (!sim.find(s.metric)) missing += (missing.empty() ? "" : ", ") + s.metric.key();
  }
  if (!missing.empty()) {
    throw ValidationError("metric sets differ between '" + sim.trace_id + "' and '" +
                          target.trace_id + "': " + missing);
  }
  std::vector<AlignmentResult> results;
  for (const auto& s : sim.series) {
    auto r = dtw(std::span<const double>(s.values),
                 std::span<const double>(target.at(s.metric).values), delta, options);
    r.metric = s.metric;
    results.push_back(std::move(r));
  }
  return aggregate(std::move(results), weights);
}

inline nlohmann::ordered_json to_json(const ValidityScore& score, const std::string& trace_id) {
  nlohmann::ordered_json j;
  j["trace_id"] = trace_id;
  auto& dims = j["per_dimension"] = nlohmann::ordered_json::array();
  for (const auto& r : score.per_dimension) {
    dims.push_back({{"metric", r.metric.key()},
                    {"raw", r.raw_cost},
                    {"normalized", r.normalized_cost},
                    {"path_length", r.path.length()}});
  }
  j["weights"] = score.weights;
  j["total"] = score.total;
  return j;
}

}  // namespace slalom
