// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "slalom/slalom.hpp"

using namespace slalom;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<GateBand> reference_bands() {
  const auto ensemble = reference_ensemble(15, 7);
  std::vector<GateBand> bands;
  for (const auto& id : default_metrics()) bands.push_back(build_band(ensemble, id));
  return bands;
}

AlignmentResult cost(double c) { return {MetricId::hierarchy(), c, c, {}}; }

Outcome decomposition() {
  Outcome o;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const double a = u(rng), b = u(rng), c = u(rng);
    const auto s = aggregate({cost(a), cost(b), cost(c)});
    o.require(std::abs(s.total - (a + b + c)) <= 1e-9, "total does not decompose");
  }
  const auto r1 = aggregate({cost(0.031), cost(0.013), cost(0.052)});
  o.require(format_fixed(r1.total) == "0.096", "0.031+0.013+0.052 displays as " + format_fixed(r1.total));
  const auto r2 = aggregate({cost(0.018), cost(0.006), cost(0.024)});
  o.require(std::abs(round_half_even(r2.total) - 0.049) <= 0.002,
            "0.018+0.006+0.024 displays as " + format_fixed(r2.total));
  return o;
}

Outcome ordering() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto target = target_from_bands(reference_bands());
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto a = score_trajectory(generate(make_archetype(ArchetypeKind::kGateFollowing, 0.02, seed)), target);
    const auto b = score_trajectory(generate(make_archetype(ArchetypeKind::kStagnant, 0.02, seed)), target);
    const auto c = score_trajectory(generate(make_archetype(ArchetypeKind::kRunaway, 0.02, seed)), target);
    const auto tag = "seed " + std::to_string(seed);
    o.require(a.total < b.total && b.total < c.total, tag + ": ordering A < B < C violated");
    for (std::size_t k = 0; k < 3; ++k) {
      const double ck = c.per_dimension[k].normalized_cost;
      o.require(ck > a.per_dimension[k].normalized_cost && ck > b.per_dimension[k].normalized_cost,
                tag + ": C not maximal on " + c.per_dimension[k].metric.key());
    }
  }
  const double dt = seconds_since(t0);
  o.require(dt < 10.0, "took " + std::to_string(dt) + " s");
  return o;
}

Outcome dtw_equivalence() {
  Outcome o;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> len(1, 6), pick(0, 4);
  const double grid[] = {0.0, 0.25, 0.5, 0.75, 1.0};
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> s(len(rng)), t(len(rng));
    for (auto& x : s) x = grid[pick(rng)];
    for (auto& x : t) x = grid[pick(rng)];
    const std::span<const double> ss(s), ts(t);
    o.require(dtw(ss, ts).raw_cost == dtw_oracle(ss, ts), "mismatch at trial " + std::to_string(trial));
  }
  const double dt = seconds_since(t0);
  o.require(dt < 5.0, "took " + std::to_string(dt) + " s");
  return o;
}

Outcome gini_closed_forms() {
  Outcome o;
  auto g = [](std::vector<double> v) { return *gini(std::span<const double>(v)); };
  const std::vector<std::pair<std::vector<double>, double>> cases = {
      {{10, 10, 10, 10}, 0.0}, {{100, 0, 0, 0}, 0.75}, {{40, 30, 20, 10}, 0.25}};
  for (const auto& [counts, expected] : cases) {
    o.require(std::abs(g(counts) - expected) <= 1e-9, "closed form off by " + std::to_string(g(counts) - expected));
    for (double k : {2.0, 10.0, 1000.0}) {
      auto scaled = counts;
      for (auto& x : scaled) x *= k;
      o.require(std::abs(g(scaled) - g(counts)) <= 1e-9, "not scale invariant at k=" + std::to_string(k));
    }
  }
  return o;
}

Outcome band_coverage() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto band = reference_bands().front();
  std::mt19937_64 rng(5);
  constexpr int kSamples = 10000;
  double worst = 0.0;
  for (std::size_t b = 0; b < band.bins(); ++b) {
    o.require(band.sigma[b] > band.sigma_floor, "sigma at floor in bin " + std::to_string(b));
    std::normal_distribution<double> draw(band.mu[b], band.sigma[b]);
    int inside = 0;
    for (int i = 0; i < kSamples; ++i) inside += band_contains(band, b, draw(rng)) ? 1 : 0;
    const double freq = static_cast<double>(inside) / kSamples;
    worst = std::max(worst, std::abs(freq - 0.954));
  }
  o.require(worst <= 0.02, "coverage deviates by " + std::to_string(worst));
  const double dt = seconds_since(t0);
  o.require(dt < 5.0, "took " + std::to_string(dt) + " s");
  return o;
}

Outcome gate_defaults() {
  Outcome o;
  const auto defaults = default_tuckman_gates();
  const auto centers = tuckman_centers();
  o.require(defaults.size() == centers.size(), "default gate count differs from centre count");
  for (const auto& c : centers) {
    bool found = false;
    for (const auto& g : defaults) {
      if (g.name == c.phase && g.metric == c.metric) {
        found = true;
        o.require(std::abs(0.5 * (g.v_min + g.v_max) - c.value) < 1e-12, std::string(c.phase) + " centre moved");
      }
    }
    o.require(found, "no default gate for " + std::string(c.phase) + ":" + c.metric.key());
  }
  const std::vector<std::tuple<std::string, std::string, double>> published = {
      {"Forming", "hierarchy", 0.48},  {"Storming", "hierarchy", 0.37}, {"Norming", "hierarchy", 0.32},
      {"Performing", "hierarchy", 0.35}, {"Storming", "cohesion", 0.4},   {"Norming", "cohesion", 0.5},
      {"Performing", "cohesion", 0.42},  {"Forming", "divergence", 0.3}};
  for (const auto& [phase, metric, value] : published) {
    bool exact = false;
    for (const auto& c : centers) exact |= c.phase == phase && c.metric.key() == metric && c.value == value;
    o.require(exact, phase + ":" + metric + " is not " + std::to_string(value));
  }

  const auto gates = tuckman_gates_from_bands(reference_bands());
  o.require(gates.size() == 12, "expected 12 band gates, got " + std::to_string(gates.size()));
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (double noise : {0.0, 0.01, 0.02}) {
      const auto a = evaluate_gates(generate(make_archetype(ArchetypeKind::kGateFollowing, noise, seed)), gates);
      o.require(!a.pruned, "A pruned at seed " + std::to_string(seed));
    }
    const auto c = evaluate_gates(generate(make_archetype(ArchetypeKind::kRunaway, 0.02, seed)), gates);
    bool cohesion = false;
    for (const auto& v : c.verdicts) cohesion |= !v.passed && v.gate.metric == MetricId::cohesion();
    o.require(cohesion, "C passed every cohesion gate at seed " + std::to_string(seed));
  }
  return o;
}

std::string pipeline_report() {
  PipelineConfig config;
  config.workers = 4;
  const MetricContext context(config);
  std::vector<Trajectory> trajectories;
  for (const auto& log : demo_corpus(15, config.seed)) {
    std::stringstream jsonl;
    write_trace_jsonl(jsonl, log);
    trajectories.push_back(extract_from_log(parse_trace(jsonl, log.trace_id), config, context));
  }
  const auto bands = build_bands(trajectories, config);
  const auto gates = resolve_gates(config, bands);
  std::vector<Trajectory> sims;
  for (auto kind : {ArchetypeKind::kGateFollowing, ArchetypeKind::kStagnant, ArchetypeKind::kRunaway}) {
    sims.push_back(generate(make_archetype(kind, kDefaultArchetypeNoise, config.seed)));
  }
  return to_json(score_simulations(sims, bands, gates, config)).dump(2);
}

Outcome determinism() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto first = pipeline_report();
  const double dt = seconds_since(t0);
  const auto second = pipeline_report();
  o.require(first == second, "report JSON differs between runs");
  o.require(dt < 30.0, "pipeline took " + std::to_string(dt) + " s");
  return o;
}

Outcome throughput() {
  Outcome o;
  const auto target = target_from_bands(reference_bands());
  const auto sim = generate(make_archetype(ArchetypeKind::kGateFollowing, 0.02, 1));
  double best = 1e9;
  for (int rep = 0; rep < 5; ++rep) {
    const auto t0 = Clock::now();
    const auto s = score_trajectory(sim, target);
    best = std::min(best, seconds_since(t0));
    o.require(s.per_dimension.size() == 3, "expected 3 dimensions");
  }
  o.require(best < 0.05, "scoring took " + std::to_string(best * 1000) + " ms");
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1 score decomposes into per-dimension costs", decomposition},
      {"2 archetype cost ordering over 20 seeds", ordering},
      {"3 dtw matches exhaustive path enumeration", dtw_equivalence},
      {"4 gini closed forms and scale invariance", gini_closed_forms},
      {"5 band coverage at two sigma", band_coverage},
      {"6 default gates and archetype verdicts", gate_defaults},
      {"7 end-to-end pipeline determinism", determinism},
      {"8 scoring throughput", throughput},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.ok ? "PASS " : "FAIL ") << name;
    if (!o.ok) std::cout << " (" << o.detail << ")";
    std::cout << "\n";
    failures += o.ok ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
