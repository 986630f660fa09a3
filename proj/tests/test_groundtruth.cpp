#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "slalom/groundtruth.hpp"

using namespace slalom;

namespace {

Trajectory one_metric(const std::string& id, std::vector<double> values,
                      MetricId metric = MetricId::hierarchy()) {
  Trajectory t;
  t.trace_id = id;
  t.bin_count = values.size();
  t.bin_ids.resize(values.size());
  std::iota(t.bin_ids.begin(), t.bin_ids.end(), std::size_t{0});
  t.series.push_back({metric, std::move(values), std::vector<bool>(t.bin_count, true)});
  return t;
}

}  // namespace

TEST(BuildBand, TwoPointSampleStdev) {
  const auto band = build_band({one_metric("a", {0.3}), one_metric("b", {0.5})}, MetricId::hierarchy());
  // Sample stdev of {0.3, 0.5}: sqrt(((-0.1)^2 + 0.1^2) / 1).
  const double sigma = std::sqrt(0.01 + 0.01);
  EXPECT_NEAR(band.mu[0], 0.4, 1e-12);
  EXPECT_NEAR(band.sigma[0], sigma, 1e-12);
  EXPECT_NEAR(band.sigma[0], 0.1414, 1e-4);
  EXPECT_NEAR(band.lower(0), 0.1172, 1e-4);
  EXPECT_NEAR(band.upper(0), 0.6828, 1e-4);
  EXPECT_EQ(band.n_traces, 2u);
}

TEST(BuildBand, IdenticalTracesHitSigmaFloor) {
  std::vector<Trajectory> ts;
  for (int i = 0; i < 5; ++i) ts.push_back(one_metric("t", {0.2, 0.4, 0.6}));
  const auto band = build_band(ts, MetricId::hierarchy());
  for (std::size_t b = 0; b < 3; ++b) {
    EXPECT_EQ(band.sigma[b], kDefaultSigmaFloor);
    EXPECT_NEAR(band.upper(b) - band.lower(b), 4 * kDefaultSigmaFloor, 1e-12);
  }
}

TEST(BuildBand, FifteenGroupsOfHundredBins) {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Trajectory> ts;
  for (int g = 0; g < 15; ++g) {
    std::vector<double> v(100);
    for (auto& x : v) x = u(rng);
    ts.push_back(one_metric("g" + std::to_string(g), v));
  }
  const auto band = build_band(ts, MetricId::hierarchy());
  EXPECT_EQ(band.bins(), 100u);
  EXPECT_EQ(band.sigma.size(), 100u);
  EXPECT_EQ(band.n_traces, 15u);
  for (std::size_t b = 0; b < 100; ++b) {
    EXPECT_LE(band.lower(b), band.upper(b));
    EXPECT_GE(band.sigma[b], band.sigma_floor);
  }
}

TEST(BuildBand, Errors) {
  EXPECT_THROW(build_band({one_metric("a", {0.1})}, MetricId::hierarchy()), ValidationError);
  EXPECT_THROW(build_band({one_metric("a", {0.1}), one_metric("b", {0.1, 0.2})}, MetricId::hierarchy()),
               ValidationError);
  EXPECT_THROW(build_band({one_metric("a", {0.1}), one_metric("b", {0.2})}, MetricId::cohesion()),
               ValidationError);
  EXPECT_THROW(build_band({one_metric("a", {0.1}), one_metric("b", {0.2})}, MetricId::hierarchy(), 0.0),
               ValidationError);
}

TEST(BuildBand, TranslationShiftsMuOnly) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 0.5);
  std::vector<Trajectory> ts, shifted;
  for (int g = 0; g < 6; ++g) {
    std::vector<double> v(20);
    for (auto& x : v) x = u(rng);
    ts.push_back(one_metric("g", v));
    for (auto& x : v) x += 0.25;
    shifted.push_back(one_metric("g", v));
  }
  const auto a = build_band(ts, MetricId::hierarchy(), 2.0, 0.0);
  const auto b = build_band(shifted, MetricId::hierarchy(), 2.0, 0.0);
  for (std::size_t i = 0; i < 20; ++i) {
    EXPECT_NEAR(b.mu[i], a.mu[i] + 0.25, 1e-9);
    EXPECT_NEAR(b.sigma[i], a.sigma[i], 1e-9);
  }
}

TEST(BandContains, ClosedInterval) {
  GateBand band;
  band.metric = MetricId::hierarchy();
  band.mu = {0.4};
  band.sigma = {0.05};
  band.n_traces = 10;
  EXPECT_TRUE(band_contains(band, 0, 0.4));
  EXPECT_TRUE(band_contains(band, 0, band.upper(0)));
  EXPECT_TRUE(band_contains(band, 0, band.lower(0)));
  EXPECT_FALSE(band_contains(band, 0, 0.4 + 3 * 0.05));
  EXPECT_THROW(band_contains(band, 1, 0.4), ValidationError);
}

TEST(BandJson, RoundTrip) {
  auto band = build_band({one_metric("a", {0.3, 0.1}), one_metric("b", {0.5, 0.2})}, MetricId::hierarchy());
  band.provenance.config_hash = "abc";
  const auto back = band_from_json(nlohmann::json::parse(to_json(band).dump()));
  EXPECT_EQ(back.mu, band.mu);
  EXPECT_EQ(back.sigma, band.sigma);
  EXPECT_EQ(back.provenance.source_hash, band.provenance.source_hash);
  EXPECT_EQ(back.provenance.config_hash, "abc");
  EXPECT_EQ(band.provenance.source_hash.size(), 16u);
  EXPECT_THROW(band_from_json(nlohmann::json::parse(R"({"metric":"x"})")), ValidationError);
}
