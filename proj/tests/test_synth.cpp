#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "slalom/report.hpp"
#include "slalom/synth.hpp"

using namespace slalom;

namespace {

std::vector<Gate> reference_gates(std::vector<GateBand>* bands_out = nullptr) {
  const auto ensemble = reference_ensemble(15, 7);
  std::vector<GateBand> bands;
  for (const auto& id : default_metrics()) bands.push_back(build_band(ensemble, id));
  auto gates = tuckman_gates_from_bands(bands);
  if (bands_out) *bands_out = std::move(bands);
  return gates;
}

}  // namespace

TEST(NormalSampler, SameSeedSameStream) {
  NormalSampler a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a();
    EXPECT_EQ(x, b());
    differs |= x != c();
  }
  EXPECT_TRUE(differs);
  NormalSampler u(1);
  for (int i = 0; i < 1000; ++i) {
    const double v = u.uniform();
    EXPECT_GE(v, 0.0);
    EXPECT_LT(v, 1.0);
    EXPECT_LT(u.below(4), 4u);
  }
}

TEST(Generate, DeterministicPerSeed) {
  const auto a = make_archetype(ArchetypeKind::kGateFollowing, 0.02, 5);
  EXPECT_EQ(generate(a).series[0].values, generate(a).series[0].values);
  const auto other = make_archetype(ArchetypeKind::kGateFollowing, 0.02, 6);
  EXPECT_NE(generate(a).series[0].values, generate(other).series[0].values);
  EXPECT_EQ(generate(a).trace_id, "sim_A");
  EXPECT_EQ(generate(a, 40).bin_count, 40u);
}

TEST(Generate, FlatAnchorsWithoutNoise) {
  SynthArchetype flat{"flat", {{MetricId::hierarchy(), {{0, 0.5}, {100, 0.5}}}}, 0.0, 1};
  const auto flat_values = generate(flat).series[0].values;
  for (double v : flat_values) EXPECT_EQ(v, 0.5);

  SynthArchetype ramp{"ramp", {{MetricId::hierarchy(), {{0, 0.0}, {100, 1.0}}}}, 0.0, 1};
  const auto r = generate(ramp, 10).series[0].values;
  EXPECT_NEAR(r[0], 0.05, 1e-12);
  EXPECT_NEAR(r[9], 0.95, 1e-12);

  SynthArchetype noisy{"n", {{MetricId::hierarchy(), {{0, 0.99}, {100, 0.01}}}}, 0.5, 3};
  const auto noisy_values = generate(noisy).series[0].values;
  for (double v : noisy_values) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Generate, AnchorErrors) {
  SynthArchetype gap{"g", {{MetricId::hierarchy(), {{10, 0.5}, {100, 0.5}}}}, 0.0, 1};
  EXPECT_THROW(generate(gap), ValidationError);
  SynthArchetype unsorted{"u", {{MetricId::hierarchy(), {{0, 0.5}, {60, 0.5}, {40, 0.5}, {100, 0.5}}}}, 0.0, 1};
  EXPECT_THROW(generate(unsorted), ValidationError);
  EXPECT_THROW(parse_archetype("D"), ValidationError);
  EXPECT_EQ(parse_archetype("c"), ArchetypeKind::kRunaway);
}

TEST(Archetypes, GateFollowingPassesRunawayFailsCohesion) {
  const auto gates = reference_gates();
  ASSERT_EQ(gates.size(), 12u);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (double noise : {0.0, 0.01, 0.02}) {
      const auto a = generate(make_archetype(ArchetypeKind::kGateFollowing, noise, seed));
      const auto eval = evaluate_gates(a, gates);
      EXPECT_FALSE(eval.pruned) << "seed " << seed << " noise " << noise;
    }
    const auto c = generate(make_archetype(ArchetypeKind::kRunaway, 0.02, seed));
    const auto eval = evaluate_gates(c, gates);
    bool cohesion_failed = false;
    for (const auto& v : eval.verdicts) {
      cohesion_failed |= !v.passed && v.gate.metric == MetricId::cohesion();
    }
    EXPECT_TRUE(cohesion_failed) << "seed " << seed;
  }
}

TEST(Archetypes, CostOrdering) {
  std::vector<GateBand> bands;
  reference_gates(&bands);
  const auto target = target_from_bands(bands);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto a = score_trajectory(generate(make_archetype(ArchetypeKind::kGateFollowing, 0.02, seed)), target);
    const auto b = score_trajectory(generate(make_archetype(ArchetypeKind::kStagnant, 0.02, seed)), target);
    const auto c = score_trajectory(generate(make_archetype(ArchetypeKind::kRunaway, 0.02, seed)), target);
    EXPECT_LT(a.total, b.total);
    EXPECT_LT(b.total, c.total);
    for (std::size_t k = 0; k < 3; ++k) {
      EXPECT_GT(c.per_dimension[k].normalized_cost, a.per_dimension[k].normalized_cost);
      EXPECT_GT(c.per_dimension[k].normalized_cost, b.per_dimension[k].normalized_cost);
    }
  }
}

TEST(SharesForGini, HitsTarget) {
  for (double target : {0.0, 0.1, 0.3, 0.48, 0.7}) {
    const auto shares = detail::shares_for_gini(target, 4);
    ASSERT_EQ(shares.size(), 4u);
    EXPECT_NEAR(*gini(std::span<const double>(shares)), target, 1e-6);
  }
}

TEST(DemoCorpus, ShapeAndDeterminism) {
  const auto corpus = demo_corpus(15, 11);
  ASSERT_EQ(corpus.size(), 15u);
  for (const auto& t : corpus) {
    std::set<std::string> speakers, segments;
    for (const auto& e : t.events) {
      speakers.insert(e.speaker_id);
      segments.insert(e.segment);
    }
    EXPECT_EQ(speakers.size(), 4u);
    EXPECT_EQ(segments.size(), 4u);
  }
  EXPECT_EQ(corpus.front().trace_id, "group_01");

  const auto again = demo_corpus(15, 11);
  for (std::size_t g = 0; g < corpus.size(); ++g) {
    std::ostringstream x, y;
    write_trace_jsonl(x, corpus[g]);
    write_trace_jsonl(y, again[g]);
    EXPECT_EQ(x.str(), y.str());
    std::istringstream in(x.str());
    EXPECT_EQ(parse_trace(in, corpus[g].trace_id).events, corpus[g].events);
  }
}

TEST(DemoCorpus, TracksGateFollowingShape) {
  PipelineConfig config;
  MetricContext ctx(config);
  std::vector<Trajectory> trajs;
  for (const auto& log : demo_corpus(15, 7)) trajs.push_back(extract_from_log(log, config, ctx));
  const auto bands = build_bands(trajs, config);
  const auto sim = generate(make_archetype(ArchetypeKind::kGateFollowing, 0.01, 3));
  const auto runaway = generate(make_archetype(ArchetypeKind::kRunaway, 0.01, 3));
  const auto target = target_from_bands(bands);
  EXPECT_LT(score_trajectory(sim, target).total, score_trajectory(runaway, target).total);
  // Hierarchy falls from Forming to Norming in the extracted bands.
  const auto& g = bands[0];
  double forming = 0, norming = 0;
  for (std::size_t b = 20; b < 30; ++b) forming += g.mu[b];
  for (std::size_t b = 65; b < 75; ++b) norming += g.mu[b];
  EXPECT_GT(forming, norming);
}

TEST(DemoCorpus, SingleGroupCannotFormBand) {
  PipelineConfig config;
  MetricContext ctx(config);
  const auto one = extract_from_log(demo_corpus(1, 7).front(), config, ctx);
  EXPECT_THROW(build_bands({one}, config), ValidationError);
}
