#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "slalom/categories.hpp"
#include "slalom/embedding.hpp"
#include "slalom/error.hpp"
#include "slalom/text.hpp"
#include "slalom/trace.hpp"

namespace slalom {

// Names one trajectory dimension. The three built-in signals have fixed keys;
// user metrics use any other key.
class MetricId {
 public:
  MetricId() = default;
  explicit MetricId(std::string key) : key_(std::move(key)) {}

  static MetricId hierarchy() { return MetricId("hierarchy"); }
  static MetricId divergence() { return MetricId("divergence"); }
  static MetricId cohesion() { return MetricId("cohesion"); }

  const std::string& key() const noexcept { return key_; }

  // "hierarchy" -> "Hierarchy", for table headers.
  std::string title() const {
    std::string t = key_;
    if (!t.empty() && t[0] >= 'a' && t[0] <= 'z') t[0] = static_cast<char>(t[0] - 32);
    return t;
  }

  friend auto operator<=>(const MetricId&, const MetricId&) = default;

 private:
  std::string key_;
};

inline std::vector<MetricId> default_metrics() {
  return {MetricId::hierarchy(), MetricId::divergence(), MetricId::cohesion()};
}

struct MetricSeries {
  MetricId metric;
  std::vector<double> values;
  std::vector<bool> defined;  // false where the value came from the fill policy
};

// K metric series over the same bins. bin_count is the B of the binned trace;
// bin_ids maps series positions back to those bins and is 0..B-1 unless bins
// were dropped.
struct Trajectory {
  std::string trace_id;
  std::size_t bin_count = 0;
  std::vector<std::size_t> bin_ids;
  std::vector<MetricSeries> series;

  std::size_t size() const noexcept { return bin_ids.size(); }

  const MetricSeries* find(const MetricId& metric) const {
    for (const auto& s : series) {
      if (s.metric == metric) return &s;
    }
    return nullptr;
  }

  const MetricSeries& at(const MetricId& metric) const {
    if (const auto* s = find(metric)) return *s;
    throw ValidationError("trajectory '" + trace_id + "' has no metric '" +
                          metric.key() + "'");
  }

  std::vector<MetricId> metrics() const {
    std::vector<MetricId> ids;
    for (const auto& s : series) ids.push_back(s.metric);
    return ids;
  }
};

using EventBin = std::vector<InteractionEvent>;

// ---------------------------------------------------------------------------
// Hierarchy

// Gini coefficient, computed from the sorted-rank form. Undefined when the
// total is zero.
inline std::optional<double> gini(std::span<const double> counts) {
  const std::size_t n = counts.size();
  if (n == 0) return std::nullopt;
  std::vector<double> sorted(counts.begin(), counts.end());
  std::sort(sorted.begin(), sorted.end());
  double total = 0.0;
  double weighted = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += sorted[i];
    weighted += (2.0 * static_cast<double>(i + 1) - static_cast<double>(n) - 1.0) *
                sorted[i];
  }
  if (!(total > 0.0)) return std::nullopt;
  return std::max(0.0, weighted / (static_cast<double>(n) * total));
}

// Word counts per roster speaker; speakers silent in this bin count as zero.
// With an empty roster only the bin's own speakers are counted.
inline std::optional<double> gini_word_counts(const EventBin& bin,
                                              std::span<const std::string> roster = {}) {
  std::map<std::string, double> counts;
  for (const auto& s : roster) counts[s] = 0.0;
  for (const auto& e : bin) counts[e.speaker_id] += static_cast<double>(word_count(e.text));
  std::vector<double> xs;
  xs.reserve(counts.size());
  for (const auto& [speaker, c] : counts) xs.push_back(c);
  return gini(xs);
}

// ---------------------------------------------------------------------------
// Divergence

inline double cosine_distance(const Embedding& a, const Embedding& b) {
  return std::clamp((1.0 - dot(a, b)) / 2.0, 0.0, 1.0);
}

// Mean (1 - cos)/2 over all unordered pairs of embeddable utterances in the
// bin. Undefined below two embeddable utterances.
inline std::optional<double> divergence(const EventBin& bin,
                                        const EmbeddingProvider& provider) {
  std::vector<std::string> texts;
  texts.reserve(bin.size());
  for (const auto& e : bin) texts.push_back(e.text);
  auto vectors = provider.embed(texts);
  if (vectors.size() != texts.size()) {
    throw ProviderError("embedding provider returned " +
                        std::to_string(vectors.size()) + " vectors for " +
                        std::to_string(texts.size()) + " texts");
  }
  std::erase_if(vectors, [](const Embedding& v) { return !is_embeddable(v); });
  if (vectors.size() < 2) return std::nullopt;
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    for (std::size_t j = i + 1; j < vectors.size(); ++j) {
      sum += cosine_distance(vectors[i], vectors[j]);
      ++pairs;
    }
  }
  return sum / static_cast<double>(pairs);
}

// ---------------------------------------------------------------------------
// Cohesion

inline constexpr double kLsmEpsilon = 1e-4;

// Per-category style match for one speaker pair.
inline double lsm_category(double p1, double p2, double epsilon = kLsmEpsilon) {
  return 1.0 - std::abs(p1 - p2) / (p1 + p2 + epsilon);
}

// Per-speaker category proportions (category tokens / all tokens), keyed by
// speaker; speakers with no tokens in the bin are left out.
inline std::map<std::string, std::vector<double>> category_profiles(
    const EventBin& bin, const CategoryTable& categories) {
  std::map<std::string, std::pair<std::vector<double>, double>> tallies;
  for (const auto& e : bin) {
    auto& [hits, total] = tallies[e.speaker_id];
    hits.resize(categories.size(), 0.0);
    for (const auto& token : tokenize(e.text)) {
      total += 1.0;
      for (std::size_t c : categories.lookup(token)) hits[c] += 1.0;
    }
  }
  std::map<std::string, std::vector<double>> profiles;
  for (auto& [speaker, tally] : tallies) {
    auto& [hits, total] = tally;
    if (total == 0.0) continue;
    for (double& h : hits) h /= total;
    profiles.emplace(speaker, std::move(hits));
  }
  return profiles;
}

// Language style matching: mean over unordered speaker pairs and categories.
// Undefined when fewer than two speakers used any tokens.
inline std::optional<double> lsm(const EventBin& bin, const CategoryTable& categories,
                                 double epsilon = kLsmEpsilon) {
  if (categories.empty()) throw ValidationError("category table is empty");
  const auto profiles = category_profiles(bin, categories);
  if (profiles.size() < 2) return std::nullopt;
  std::vector<const std::vector<double>*> ps;
  for (const auto& [speaker, p] : profiles) ps.push_back(&p);
  double sum = 0.0;
  std::size_t terms = 0;
  for (std::size_t a = 0; a < ps.size(); ++a) {
    for (std::size_t b = a + 1; b < ps.size(); ++b) {
      for (std::size_t c = 0; c < categories.size(); ++c) {
        sum += lsm_category((*ps[a])[c], (*ps[b])[c], epsilon);
        ++terms;
      }
    }
  }
  return sum / static_cast<double>(terms);
}

// ---------------------------------------------------------------------------
// Fill policies

enum class FillPolicy {
  kLinear,    // interpolate between nearest defined bins, extend at the edges
  kHoldLast,  // carry the last defined value forward; leading gaps take the first
  kDropBin,   // remove bins where any metric is undefined
};

// Fills undefined entries in place. Defined entries are never touched. Throws
// when nothing is defined.
inline void fill_series(std::vector<double>& values, const std::vector<bool>& defined,
                        FillPolicy policy) {
  std::vector<std::size_t> known;
  for (std::size_t i = 0; i < defined.size(); ++i) {
    if (defined[i]) known.push_back(i);
  }
  if (known.empty()) throw ValidationError("metric is undefined in every bin");
  if (policy == FillPolicy::kDropBin) return;

  for (std::size_t i = 0; i < known.front(); ++i) values[i] = values[known.front()];
  for (std::size_t i = known.back() + 1; i < values.size(); ++i) {
    values[i] = values[known.back()];
  }
  for (std::size_t k = 0; k + 1 < known.size(); ++k) {
    const std::size_t lo = known[k];
    const std::size_t hi = known[k + 1];
    for (std::size_t i = lo + 1; i < hi; ++i) {
      if (policy == FillPolicy::kHoldLast) {
        values[i] = values[lo];
      } else {
        const double f = static_cast<double>(i - lo) / static_cast<double>(hi - lo);
        values[i] = values[lo] + f * (values[hi] - values[lo]);
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Extraction

using BinMetric = std::function<std::optional<double>(const EventBin&, const BinnedTrace&)>;

struct NamedMetric {
  MetricId id;
  BinMetric compute;
};

// Builds one of the three built-in metrics. The provider and table must
// outlive the returned callable.
inline BinMetric standard_metric(const MetricId& id, const EmbeddingProvider& provider,
                                 const CategoryTable& categories) {
  if (id == MetricId::hierarchy()) {
    return [](const EventBin& bin, const BinnedTrace& trace) {
      return gini_word_counts(bin, trace.roster);
    };
  }
  if (id == MetricId::divergence()) {
    return [&provider](const EventBin& bin, const BinnedTrace&) {
      return divergence(bin, provider);
    };
  }
  if (id == MetricId::cohesion()) {
    return [&categories](const EventBin& bin, const BinnedTrace&) {
      return lsm(bin, categories);
    };
  }
  throw ValidationError("unknown metric '" + id.key() + "'");
}

inline Trajectory extract_trajectory(const BinnedTrace& trace,
                                     const std::vector<NamedMetric>& metrics,
                                     FillPolicy fill = FillPolicy::kLinear) {
  if (metrics.empty()) throw ValidationError("no metrics requested");
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    for (std::size_t j = i + 1; j < metrics.size(); ++j) {
      if (metrics[i].id == metrics[j].id) {
        throw ValidationError("duplicate metric '" + metrics[i].id.key() + "'");
      }
    }
  }

  const std::size_t B = trace.bins.size();
  Trajectory out;
  out.trace_id = trace.trace_id;
  out.bin_count = B;
  out.bin_ids.resize(B);
  std::iota(out.bin_ids.begin(), out.bin_ids.end(), std::size_t{0});

  for (const auto& m : metrics) {
    MetricSeries s;
    s.metric = m.id;
    s.values.assign(B, 0.0);
    s.defined.assign(B, false);
    for (std::size_t b = 0; b < B; ++b) {
      std::optional<double> v;
      try {
        v = m.compute(trace.bins[b], trace);
      } catch (const ProviderError& e) {
        throw ProviderError("metric '" + m.id.key() + "' at bin " + std::to_string(b) +
                            ": " + e.what());
      }
      if (v && std::isfinite(*v)) {
        s.values[b] = *v;
        s.defined[b] = true;
      }
    }
    try {
      fill_series(s.values, s.defined, fill);
    } catch (const ValidationError&) {
      throw ValidationError("trace '" + trace.trace_id + "': metric '" + m.id.key() +
                            "' is undefined in every bin");
    }
    out.series.push_back(std::move(s));
  }

  if (fill == FillPolicy::kDropBin) {
    std::vector<std::size_t> keep;
    for (std::size_t b = 0; b < B; ++b) {
      bool all = std::all_of(out.series.begin(), out.series.end(),
                             [b](const MetricSeries& s) { return bool(s.defined[b]); });
      if (all) keep.push_back(b);
    }
    if (keep.empty()) {
      throw ValidationError("trace '" + trace.trace_id +
                            "': no bin has every metric defined");
    }
    for (auto& s : out.series) {
      MetricSeries kept{s.metric, {}, {}};
      for (std::size_t b : keep) {
        kept.values.push_back(s.values[b]);
        kept.defined.push_back(true);
      }
      s = std::move(kept);
    }
    out.bin_ids = std::move(keep);
  }
  return out;
}

inline Trajectory extract_trajectory(const BinnedTrace& trace,
                                     std::span<const MetricId> metrics,
                                     const EmbeddingProvider& provider,
                                     FillPolicy fill = FillPolicy::kLinear,
                                     const CategoryTable& categories = default_categories()) {
  std::vector<NamedMetric> named;
  for (const auto& id : metrics) named.push_back({id, standard_metric(id, provider, categories)});
  return extract_trajectory(trace, named, fill);
}

// ---------------------------------------------------------------------------
// Serialization

// Shortest decimal text that reads back to the same double.
inline std::string format_number(double x) { return nlohmann::json(x).dump(); }

inline nlohmann::ordered_json to_json(const Trajectory& t) {
  nlohmann::ordered_json j;
  j["trace_id"] = t.trace_id;
  j["bin_count"] = t.bin_count;
  j["bin_ids"] = t.bin_ids;
  auto& series = j["series"] = nlohmann::ordered_json::array();
  for (const auto& s : t.series) {
    nlohmann::ordered_json js;
    js["metric"] = s.metric.key();
    js["values"] = s.values;
    std::vector<bool> filled(s.defined.size());
    for (std::size_t i = 0; i < filled.size(); ++i) filled[i] = !s.defined[i];
    js["was_filled"] = filled;
    series.push_back(std::move(js));
  }
  return j;
}

inline Trajectory trajectory_from_json(const nlohmann::json& j) {
  try {
    Trajectory t;
    t.trace_id = j.at("trace_id").get<std::string>();
    t.bin_count = j.at("bin_count").get<std::size_t>();
    t.bin_ids = j.at("bin_ids").get<std::vector<std::size_t>>();
    for (std::size_t b : t.bin_ids) {
      if (b >= t.bin_count) throw ValidationError("bin id out of range");
    }
    for (const auto& js : j.at("series")) {
      MetricSeries s;
      s.metric = MetricId(js.at("metric").get<std::string>());
      s.values = js.at("values").get<std::vector<double>>();
      auto filled = js.at("was_filled").get<std::vector<bool>>();
      if (s.values.size() != t.bin_ids.size() || filled.size() != t.bin_ids.size()) {
        throw ValidationError("series '" + s.metric.key() + "' length does not match bins");
      }
      s.defined.resize(filled.size());
      for (std::size_t i = 0; i < filled.size(); ++i) s.defined[i] = !filled[i];
      t.series.push_back(std::move(s));
    }
    if (t.series.empty()) throw ValidationError("trajectory has no series");
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad trajectory document: ") + e.what());
  }
}

// Long format: bin,metric,value,was_filled
inline void write_trajectory_csv(std::ostream& out, const Trajectory& t) {
  out << "bin,metric,value,was_filled\n";
  for (const auto& s : t.series) {
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      out << t.bin_ids[i] << ',' << s.metric.key() << ',' << format_number(s.values[i])
          << ',' << (s.defined[i] ? "false" : "true") << '\n';
    }
  }
}

}  // namespace slalom
