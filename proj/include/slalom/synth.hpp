#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "slalom/categories.hpp"
#include "slalom/error.hpp"
#include "slalom/hash.hpp"
#include "slalom/metrics.hpp"
#include "slalom/trace.hpp"

namespace slalom {

// Portable normal sampler: Box-Muller over raw mt19937_64 output, so a seed
// yields the same stream with any standard library.
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) : rng_(seed) {}

  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

  double operator()(double mean = 0.0, double stddev = 1.0) {
    if (cached_) {
      cached_ = false;
      return mean + stddev * spare_;
    }
    const double u1 = (static_cast<double>(rng_() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    constexpr double kTwoPi = 6.283185307179586;
    spare_ = r * std::sin(kTwoPi * u2);
    cached_ = true;
    return mean + stddev * r * std::cos(kTwoPi * u2);
  }

  std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool cached_ = false;
};

struct Anchor {
  double t = 0.0;  // percent timeline
  double value = 0.0;
};

struct MetricAnchors {
  MetricId metric;
  std::vector<Anchor> points;
};

struct SynthArchetype {
  std::string name;
  std::vector<MetricAnchors> anchors;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

enum class ArchetypeKind { kGateFollowing, kStagnant, kRunaway };

inline constexpr double kDefaultArchetypeNoise = 0.01;

// Sim A follows the Tuckman centres; Sim B stays flat through Storming;
// Sim C runs away to Hierarchy 0.7 while Cohesion collapses to 0.1.
inline SynthArchetype make_archetype(ArchetypeKind kind, double noise_sigma = kDefaultArchetypeNoise,
                                     std::uint64_t seed = 0) {
  const auto G = MetricId::hierarchy();
  const auto D = MetricId::divergence();
  const auto L = MetricId::cohesion();
  SynthArchetype a;
  a.noise_sigma = noise_sigma;
  a.seed = seed;
  switch (kind) {
    case ArchetypeKind::kGateFollowing:
      a.name = "A";
      a.anchors = {
          {G, {{0, 0.50}, {25, 0.48}, {45, 0.37}, {70, 0.32}, {98, 0.35}, {100, 0.35}}},
          {D, {{0, 0.30}, {25, 0.30}, {45, 0.38}, {70, 0.30}, {100, 0.28}}},
          {L, {{0, 0.30}, {25, 0.32}, {45, 0.40}, {70, 0.50}, {98, 0.42}, {100, 0.42}}},
      };
      break;
    case ArchetypeKind::kStagnant:
      a.name = "B";
      a.anchors = {
          {G, {{0, 0.42}, {100, 0.40}}},
          {D, {{0, 0.31}, {100, 0.31}}},
          {L, {{0, 0.34}, {100, 0.38}}},
      };
      break;
    case ArchetypeKind::kRunaway:
      a.name = "C";
      a.anchors = {
          {G, {{0, 0.50}, {25, 0.52}, {45, 0.60}, {70, 0.68}, {100, 0.70}}},
          {D, {{0, 0.30}, {25, 0.40}, {45, 0.52}, {70, 0.58}, {100, 0.60}}},
          {L, {{0, 0.30}, {25, 0.28}, {45, 0.22}, {70, 0.14}, {100, 0.10}}},
      };
      break;
  }
  return a;
}

inline ArchetypeKind parse_archetype(const std::string& name) {
  if (name == "A" || name == "a") return ArchetypeKind::kGateFollowing;
  if (name == "B" || name == "b") return ArchetypeKind::kStagnant;
  if (name == "C" || name == "c") return ArchetypeKind::kRunaway;
  throw ValidationError("unknown archetype '" + name + "' (expected A, B or C)");
}

inline void validate_anchors(const MetricAnchors& a) {
  const auto& p = a.points;
  if (p.empty() || p.front().t != 0.0 || p.back().t != 100.0) {
    throw ValidationError("anchors for '" + a.metric.key() + "' must span [0, 100]");
  }
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (!(p[i - 1].t <= p[i].t)) {
      throw ValidationError("anchors for '" + a.metric.key() + "' must be sorted by t");
    }
  }
}

// Piecewise-linear value through the anchors at time t.
inline double interpolate(const std::vector<Anchor>& points, double t) {
  if (t <= points.front().t) return points.front().value;
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (t <= points[i].t) {
      const double span = points[i].t - points[i - 1].t;
      if (span <= 0.0) return points[i].value;
      const double f = (t - points[i - 1].t) / span;
      return points[i - 1].value + f * (points[i].value - points[i - 1].value);
    }
  }
  return points.back().value;
}

inline double bin_center(std::size_t bin, std::size_t bin_count) {
  return (static_cast<double>(bin) + 0.5) * 100.0 / static_cast<double>(bin_count);
}

// Samples the anchors at bin centres, adds seeded i.i.d. Gaussian noise per
// bin and clips to [0, 1]. Each metric draws from its own derived stream.
inline Trajectory generate(const SynthArchetype& archetype, std::size_t bin_count = 100) {
  if (bin_count < 2) throw ValidationError("synthetic trajectories need at least 2 bins");
  if (archetype.noise_sigma < 0.0) throw ValidationError("noise sigma must be non-negative");
  Trajectory out;
  out.trace_id = "sim_" + archetype.name;
  out.bin_count = bin_count;
  out.bin_ids.resize(bin_count);
  std::iota(out.bin_ids.begin(), out.bin_ids.end(), std::size_t{0});
  for (std::size_t k = 0; k < archetype.anchors.size(); ++k) {
    const auto& a = archetype.anchors[k];
    validate_anchors(a);
    NormalSampler noise(mix64(archetype.seed ^ mix64(k + 1)));
    MetricSeries s{a.metric, std::vector<double>(bin_count), std::vector<bool>(bin_count, true)};
    for (std::size_t b = 0; b < bin_count; ++b) {
      double v = interpolate(a.points, bin_center(b, bin_count));
      if (archetype.noise_sigma > 0.0) v += noise(0.0, archetype.noise_sigma);
      s.values[b] = std::clamp(v, 0.0, 1.0);
    }
    out.series.push_back(std::move(s));
  }
  return out;
}

// Stand-in ground-truth ensemble: archetype A with per-group anchor jitter
// plus per-bin noise, one trajectory per group.
inline std::vector<Trajectory> reference_ensemble(std::size_t n_groups, std::uint64_t seed,
                                                  std::size_t bin_count = 100,
                                                  double anchor_jitter = 0.03,
                                                  double bin_noise = 0.02) {
  std::vector<Trajectory> out;
  for (std::size_t g = 0; g < n_groups; ++g) {
    auto a = make_archetype(ArchetypeKind::kGateFollowing, bin_noise, mix64(seed ^ g));
    NormalSampler jitter(mix64(a.seed + 1));
    for (auto& m : a.anchors) {
      for (auto& p : m.points) p.value += jitter(0.0, anchor_jitter);
    }
    auto t = generate(a, bin_count);
    char id[32];
    std::snprintf(id, sizeof id, "reference_%02zu", g + 1);
    t.trace_id = id;
    out.push_back(std::move(t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Event-level demo corpus

namespace detail {

// Geometric speaker shares r^rank whose Gini matches `target` (bisection).
inline std::vector<double> shares_for_gini(double target, std::size_t speakers) {
  const double cap = static_cast<double>(speakers - 1) / static_cast<double>(speakers);
  target = std::clamp(target, 0.0, cap - 1e-6);
  auto shares = [&](double r) {
    std::vector<double> w(speakers);
    double p = 1.0;
    for (auto& x : w) {
      x = p;
      p *= r;
    }
    return w;
  };
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    const auto w = shares(mid);
    if (gini(w).value_or(0.0) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  auto w = shares(0.5 * (lo + hi));
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (auto& x : w) x /= total;
  return w;
}

inline std::size_t draw(NormalSampler& rng, const std::vector<double>& weights) {
  double u = rng.uniform() * std::accumulate(weights.begin(), weights.end(), 0.0);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  return weights.size() - 1;
}

inline const std::vector<std::string>& design_vocabulary() {
  static const std::vector<std::string> words = {
      "remote",  "button",   "battery", "design",  "colour",  "shape",    "market",
      "budget",  "user",     "screen",  "voice",   "chip",    "case",     "rubber",
      "plastic", "logo",     "trend",   "fancy",   "simple",  "price",    "scroll",
      "wheel",   "kinetic",  "solar",   "curved",  "spongy",  "banana",   "fruit",
      "target",  "audience", "survey",  "feature", "menu",    "channel",  "volume",
      "power",   "prototype", "sample", "evaluate", "criteria", "meeting", "drawing"};
  return words;
}

// Pronounceable filler words outside every category, for off-topic content.
inline std::string filler_word(NormalSampler& rng) {
  static constexpr std::array<const char*, 16> kSyllables = {
      "ka", "lo", "mi", "ren", "tu", "vax", "zel", "po", "qui", "dar", "fen", "gor", "hu", "jin", "mop", "sy"};
  std::string w;
  for (int i = 0; i < 3; ++i) w += kSyllables[rng.below(kSyllables.size())];
  return w;
}

}  // namespace detail

struct DemoCorpusOptions {
  std::size_t sessions = 4;
  double session_seconds = 1200.0;
  double seconds_per_word = 0.25;
  double turn_gap = 0.3;
  double group_jitter = 0.03;
};

namespace detail {

// One synthetic utterance. Function words come from the shared style with
// probability `align`, else from the speaker's own preferences; content
// words are on-topic with probability `on_topic`, else unique filler.
inline std::string compose_utterance(NormalSampler& rng, std::size_t n_words, double align,
                                     double on_topic, std::size_t topic,
                                     const std::vector<double>& own_style,
                                     const CategoryTable& categories) {
  const auto& vocabulary = design_vocabulary();
  const std::vector<double> shared(categories.size(), 1.0);
  std::string text;
  for (std::size_t w = 0; w < n_words; ++w) {
    std::string word;
    if (rng.uniform() < 0.5) {
      const auto& mix = rng.uniform() < align ? shared : own_style;
      const auto& pool = categories.words(draw(rng, mix));
      word = pool[rng.below(pool.size())];
    } else if (rng.uniform() < on_topic) {
      word = vocabulary[(topic * 3 + rng.below(3)) % vocabulary.size()];
    } else {
      word = filler_word(rng);
    }
    if (w == 0 && word[0] >= 'a' && word[0] <= 'z') word[0] = static_cast<char>(word[0] - 32);
    text += (w == 0 ? "" : " ") + word;
  }
  return text + '.';
}

inline std::vector<double> random_style(NormalSampler& rng, std::size_t categories) {
  std::vector<double> style(categories);
  for (auto& x : style) {
    const double u = rng.uniform();
    x = u * u * u * u + 1e-3;
  }
  return style;
}

// Inverts a monotone knob -> realized-metric curve by linear interpolation.
inline double invert_curve(const std::array<double, 5>& realized, double target) {
  constexpr std::array<double, 5> kKnobs = {0.0, 0.25, 0.5, 0.75, 1.0};
  const bool rising = realized.back() > realized.front();
  for (std::size_t i = 1; i < realized.size(); ++i) {
    const double a = realized[i - 1];
    const double b = realized[i];
    if ((rising && target <= b) || (!rising && target >= b)) {
      const double f = std::clamp((target - a) / (b - a), 0.0, 1.0);
      return kKnobs[i - 1] + f * (kKnobs[i] - kKnobs[i - 1]);
    }
  }
  return kKnobs.back();
}

// Realized bin metrics (22 utterances, 4 speakers) measured at knob settings
// 0, 0.25, 0.5, 0.75, 1. Targets outside a curve's range saturate.
inline double style_alignment_for(double lsm_target) {
  return invert_curve({0.394, 0.405, 0.483, 0.553, 0.582}, lsm_target);
}

inline double topicality_for(double divergence_target) {
  return invert_curve({0.492, 0.476, 0.432, 0.374, 0.310}, divergence_target);
}

}  // namespace detail

// Synthetic four-speaker meeting logs driven by archetype A's targets. Turns
// are scheduled so cumulative word shares follow the geometric shares whose
// Gini equals the target (Gini of expected counts, not expected Gini);
// function-word alignment and topical overlap follow the Cohesion and
// Divergence targets through fitted maps.
inline std::vector<Trace> demo_corpus(std::size_t n_groups, std::uint64_t seed,
                                      const DemoCorpusOptions& options = {}) {
  static constexpr std::array<const char*, 4> kSpeakers = {"PM", "ME", "UI", "ID"};
  static constexpr std::array<const char*, 4> kSessions = {"a", "b", "c", "d"};
  if (options.sessions == 0 || options.sessions > kSessions.size()) {
    throw ValidationError("demo corpus supports 1 to 4 sessions per group");
  }
  const auto& categories = default_categories();
  const auto target = make_archetype(ArchetypeKind::kGateFollowing, 0.0, seed);

  std::vector<Trace> corpus;
  for (std::size_t g = 0; g < n_groups; ++g) {
    NormalSampler rng(mix64(seed ^ g));
    std::array<double, 3> offset{};
    for (auto& o : offset) o = rng(0.0, options.group_jitter);
    auto target_at = [&](std::size_t metric, double p) {
      return interpolate(target.anchors[metric].points, p) + offset[metric];
    };

    // Dominance order rotates per group.
    std::vector<std::size_t> rank(kSpeakers.size());
    std::iota(rank.begin(), rank.end(), std::size_t{0});
    std::rotate(rank.begin(), rank.begin() + static_cast<std::ptrdiff_t>(g % rank.size()), rank.end());

    std::vector<std::vector<double>> style;
    for (std::size_t s = 0; s < kSpeakers.size(); ++s) style.push_back(detail::random_style(rng, categories.size()));
    std::vector<double> credit(kSpeakers.size(), 0.0);

    std::vector<InteractionEvent> events;
    const double total_seconds = options.session_seconds * static_cast<double>(options.sessions);
    for (std::size_t s = 0; s < options.sessions; ++s) {
      double clock = 0.0;
      while (clock < options.session_seconds) {
        const double p =
            100.0 * (static_cast<double>(s) * options.session_seconds + clock) / total_seconds;
        const auto shares = detail::shares_for_gini(target_at(0, p), kSpeakers.size());
        const std::size_t n_words = 3 + rng.below(10);

        // Speaker furthest behind its word share talks next.
        std::size_t speaker = 0;
        for (std::size_t r = 0; r < shares.size(); ++r) {
          credit[rank[r]] += shares[r] * static_cast<double>(n_words);
        }
        for (std::size_t i = 1; i < credit.size(); ++i) {
          if (credit[i] > credit[speaker]) speaker = i;
        }
        credit[speaker] -= static_cast<double>(n_words);

        std::string text = detail::compose_utterance(
            rng, n_words, detail::style_alignment_for(target_at(2, p)),
            detail::topicality_for(target_at(1, p)), static_cast<std::size_t>(p / 10.0),
            style[speaker], categories);

        const double duration = options.seconds_per_word * static_cast<double>(n_words);
        const double start = std::round(clock * 1000.0) / 1000.0;
        const double end = std::round((clock + duration) * 1000.0) / 1000.0;
        events.push_back({kSpeakers[speaker], start, end, std::move(text), kSessions[s]});
        clock += duration + options.turn_gap * (0.5 + rng.uniform());
      }
    }
    char id[32];
    std::snprintf(id, sizeof id, "group_%02zu", g + 1);
    corpus.push_back(make_trace(id, std::move(events)));
  }
  return corpus;
}

}  // namespace slalom
