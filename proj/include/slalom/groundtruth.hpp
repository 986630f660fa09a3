#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"
#include "slalom/error.hpp"
#include "slalom/hash.hpp"
#include "slalom/metrics.hpp"

namespace slalom {

inline constexpr double kDefaultBandMultiplier = 2.0;
inline constexpr double kDefaultSigmaFloor = 0.01;

struct Provenance {
  std::string source_hash;
  std::string config_hash;
};

// Per-bin envelope mu +/- multiplier * sigma for one metric.
struct GateBand {
  MetricId metric;
  std::vector<double> mu;
  std::vector<double> sigma;
  std::size_t n_traces = 0;
  double multiplier = kDefaultBandMultiplier;
  double sigma_floor = kDefaultSigmaFloor;
  Provenance provenance;

  std::size_t bins() const noexcept { return mu.size(); }
  double lower(std::size_t bin) const { return mu.at(bin) - multiplier * sigma.at(bin); }
  double upper(std::size_t bin) const { return mu.at(bin) + multiplier * sigma.at(bin); }
};

// Digest of the contributing trajectories' values for `metric`, in input order.
inline std::string source_hash(const std::vector<Trajectory>& trajectories,
                               const MetricId& metric) {
  std::uint64_t h = fnv1a(metric.key());
  for (const auto& t : trajectories) {
    h = fnv1a(t.trace_id, h);
    if (const auto* s = t.find(metric)) {
      for (double v : s->values) h = fnv1a(format_number(v), h);
    }
  }
  return hex64(h);
}

// Per-bin mean and sample standard deviation (n - 1) across trajectories,
// with sigma floored at sigma_floor.
inline GateBand build_band(const std::vector<Trajectory>& trajectories, const MetricId& metric,
                           double multiplier = kDefaultBandMultiplier,
                           double sigma_floor = kDefaultSigmaFloor) {
  if (trajectories.size() < 2) {
    throw ValidationError("a band needs at least 2 trajectories, got " +
                          std::to_string(trajectories.size()));
  }
  if (!(multiplier > 0.0)) throw ValidationError("band multiplier must be positive");
  if (!(sigma_floor >= 0.0)) throw ValidationError("sigma floor must be non-negative");

  std::vector<const std::vector<double>*> columns;
  for (const auto& t : trajectories) columns.push_back(&t.at(metric).values);
  const std::size_t B = columns.front()->size();
  for (std::size_t k = 0; k < columns.size(); ++k) {
    if (columns[k]->size() != B) {
      throw ValidationError("trajectory '" + trajectories[k].trace_id + "' has " +
                            std::to_string(columns[k]->size()) + " bins, expected " +
                            std::to_string(B));
    }
  }

  GateBand band;
  band.metric = metric;
  band.multiplier = multiplier;
  band.sigma_floor = sigma_floor;
  band.n_traces = trajectories.size();
  band.mu.resize(B);
  band.sigma.resize(B);
  const double n = static_cast<double>(columns.size());
  for (std::size_t b = 0; b < B; ++b) {
    double sum = 0.0;
    for (const auto* c : columns) sum += (*c)[b];
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto* c : columns) ss += ((*c)[b] - mean) * ((*c)[b] - mean);
    band.mu[b] = mean;
    band.sigma[b] = std::max(std::sqrt(ss / (n - 1.0)), sigma_floor);
  }
  band.provenance.source_hash = source_hash(trajectories, metric);
  return band;
}

// Closed interval membership.
inline bool band_contains(const GateBand& band, std::size_t bin, double value) {
  if (bin >= band.bins()) {
    throw ValidationError("bin " + std::to_string(bin) + " out of range for a " +
                          std::to_string(band.bins()) + "-bin band");
  }
  return band.lower(bin) <= value && value <= band.upper(bin);
}

inline nlohmann::ordered_json to_json(const GateBand& band) {
  nlohmann::ordered_json j;
  j["metric"] = band.metric.key();
  j["B"] = band.bins();
  j["multiplier"] = band.multiplier;
  j["sigma_floor"] = band.sigma_floor;
  j["mu"] = band.mu;
  j["sigma"] = band.sigma;
  j["n_traces"] = band.n_traces;
  j["provenance"] = {{"source_hash", band.provenance.source_hash},
                     {"config_hash", band.provenance.config_hash}};
  return j;
}

inline GateBand band_from_json(const nlohmann::json& j) {
  try {
    GateBand band;
    band.metric = MetricId(j.at("metric").get<std::string>());
    band.multiplier = j.at("multiplier").get<double>();
    band.sigma_floor = j.value("sigma_floor", kDefaultSigmaFloor);
    band.mu = j.at("mu").get<std::vector<double>>();
    band.sigma = j.at("sigma").get<std::vector<double>>();
    band.n_traces = j.at("n_traces").get<std::size_t>();
    if (j.contains("provenance")) {
      band.provenance.source_hash = j["provenance"].value("source_hash", "");
      band.provenance.config_hash = j["provenance"].value("config_hash", "");
    }
    const auto B = j.at("B").get<std::size_t>();
    if (band.mu.size() != B || band.sigma.size() != B) {
      throw ValidationError("band mu/sigma length does not match B");
    }
    if (!(band.multiplier > 0.0)) throw ValidationError("band multiplier must be positive");
    for (double s : band.sigma) {
      if (!(s >= 0.0)) throw ValidationError("band sigma must be non-negative");
    }
    return band;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad band document: ") + e.what());
  }
}

// The band centre as a one-metric target series.
inline MetricSeries band_mean_series(const GateBand& band) {
  return {band.metric, band.mu, std::vector<bool>(band.mu.size(), true)};
}

}  // namespace slalom
