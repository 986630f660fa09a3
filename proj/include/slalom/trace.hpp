#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "slalom/error.hpp"

namespace slalom {

struct InteractionEvent {
  std::string speaker_id;
  double start_time = 0.0;  // seconds
  double end_time = 0.0;
  std::string text;
  std::string segment;

  double midpoint() const noexcept { return 0.5 * (start_time + end_time); }

  friend bool operator==(const InteractionEvent&,
                         const InteractionEvent&) = default;
};

struct Segment {
  std::string label;
  double begin = 0.0;
  double end = 0.0;

  double duration() const noexcept { return end - begin; }

  friend bool operator==(const Segment&, const Segment&) = default;
};

// An interaction log. Events are stably sorted by start time; segments keep
// the original sessions' extents in order of first appearance.
struct Trace {
  std::string trace_id;
  std::vector<InteractionEvent> events;
  std::vector<Segment> segments;

  friend bool operator==(const Trace&, const Trace&) = default;
};

// Trace on the percent timeline t in [0, 100].
struct NormalizedTrace {
  std::string trace_id;
  std::vector<InteractionEvent> events;
};

enum class TrimPolicy {
  kAllButFirst,  // sessions 2..n
  kAll,
  kNone,
};

struct BinnedTrace {
  std::string trace_id;
  std::size_t bin_count = 0;
  std::vector<std::vector<InteractionEvent>> bins;
  // Every speaker seen anywhere in the trace, sorted. Silent speakers in a bin
  // still belong to that bin's roster.
  std::vector<std::string> roster;
};

namespace detail {

inline void validate_event(const InteractionEvent& e, std::size_t line) {
  auto fail = [&](const std::string& msg) -> void {
    if (line > 0) throw ParseError(line, msg);
    throw ValidationError(msg);
  };
  if (!std::isfinite(e.start_time) || !std::isfinite(e.end_time)) {
    fail("event times must be finite");
  }
  if (e.start_time < 0.0) fail("start_time must be non-negative");
  if (e.end_time < e.start_time) {
    fail("end_time " + std::to_string(e.end_time) + " precedes start_time " +
         std::to_string(e.start_time));
  }
}

inline void stable_sort_events(std::vector<InteractionEvent>& events) {
  std::stable_sort(events.begin(), events.end(),
                   [](const InteractionEvent& a, const InteractionEvent& b) {
                     return a.start_time < b.start_time;
                   });
}

// Segments in order of first appearance (input order), with extents spanning
// their events.
inline std::vector<Segment> segments_of(
    const std::vector<InteractionEvent>& input_order) {
  std::vector<Segment> segments;
  for (const auto& e : input_order) {
    auto it = std::find_if(segments.begin(), segments.end(),
                           [&](const Segment& s) { return s.label == e.segment; });
    if (it == segments.end()) {
      segments.push_back({e.segment, e.start_time, e.end_time});
    } else {
      it->begin = std::min(it->begin, e.start_time);
      it->end = std::max(it->end, e.end_time);
    }
  }
  return segments;
}

inline std::pair<double, double> extent(
    const std::vector<InteractionEvent>& events) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& e : events) {
    lo = std::min(lo, e.start_time);
    hi = std::max(hi, e.end_time);
  }
  return {lo, hi};
}

}  // namespace detail

inline Trace make_trace(std::string trace_id,
                        std::vector<InteractionEvent> events) {
  for (const auto& e : events) detail::validate_event(e, 0);
  Trace trace;
  trace.trace_id = std::move(trace_id);
  trace.segments = detail::segments_of(events);
  detail::stable_sort_events(events);
  trace.events = std::move(events);
  return trace;
}

// Reads the JSON-Lines interchange format: one object per line with
// speaker_id, start_time, end_time, text and segment. Blank lines are skipped.
inline Trace parse_trace(std::istream& in, std::string trace_id = {}) {
  std::vector<InteractionEvent> events;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(line_no, std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ParseError(line_no, "expected a JSON object");

    InteractionEvent ev;
    auto string_field = [&](const char* key) {
      auto it = obj.find(key);
      if (it == obj.end() || !it->is_string()) {
        throw ParseError(line_no, std::string("missing string field '") + key +
                                      "'");
      }
      return it->get<std::string>();
    };
    auto number_field = [&](const char* key) {
      auto it = obj.find(key);
      if (it == obj.end() || !it->is_number()) {
        throw ParseError(line_no, std::string("missing numeric field '") +
                                      key + "'");
      }
      return it->get<double>();
    };
    ev.speaker_id = string_field("speaker_id");
    ev.start_time = number_field("start_time");
    ev.end_time = number_field("end_time");
    ev.text = string_field("text");
    ev.segment = string_field("segment");
    detail::validate_event(ev, line_no);
    events.push_back(std::move(ev));
  }
  return make_trace(std::move(trace_id), std::move(events));
}

inline nlohmann::ordered_json event_to_json(const InteractionEvent& e) {
  nlohmann::ordered_json j;
  j["speaker_id"] = e.speaker_id;
  j["start_time"] = e.start_time;
  j["end_time"] = e.end_time;
  j["text"] = e.text;
  j["segment"] = e.segment;
  return j;
}

// Inverse of parse_trace. Events are written in stored order.
inline void write_trace_jsonl(std::ostream& out, const Trace& trace) {
  for (const auto& e : trace.events) out << event_to_json(e).dump() << '\n';
}

// Splits a trace into one session per segment label, in segment order.
inline std::vector<Trace> split_sessions(const Trace& trace) {
  std::vector<Trace> sessions;
  for (const auto& seg : trace.segments) {
    Trace s;
    s.trace_id = trace.trace_id;
    for (const auto& e : trace.events) {
      if (e.segment == seg.label) s.events.push_back(e);
    }
    s.segments = {seg};
    sessions.push_back(std::move(s));
  }
  return sessions;
}

// Lays sessions end to end on one continuous clock. Each session's local
// clock starts at its earliest event; sessions selected by `policy` first
// lose events whose midpoint falls in the leading or trailing `trim_fraction`
// of the session's duration. Trimmed sessions keep their full duration on the
// output timeline.
inline Trace concatenate_sessions(const std::vector<Trace>& sessions,
                                  double trim_fraction = 0.05,
                                  TrimPolicy policy = TrimPolicy::kAllButFirst) {
  if (sessions.empty()) throw ValidationError("no sessions to concatenate");
  if (!(trim_fraction >= 0.0 && trim_fraction < 0.5)) {
    throw ValidationError("trim_fraction must lie in [0, 0.5)");
  }

  Trace out;
  out.trace_id = sessions.front().trace_id;
  double offset = 0.0;
  for (std::size_t s = 0; s < sessions.size(); ++s) {
    const auto& session = sessions[s];
    auto [lo, hi] = detail::extent(session.events);
    for (const auto& seg : session.segments) {
      lo = std::min(lo, seg.begin);
      hi = std::max(hi, seg.end);
    }
    const double duration = hi - lo;
    if (!(duration > 0.0)) {
      throw ValidationError("session " + std::to_string(s + 1) +
                            " has zero duration");
    }

    const bool trim = policy == TrimPolicy::kAll ||
                      (policy == TrimPolicy::kAllButFirst && s > 0);
    const double keep_lo = trim_fraction * duration;
    const double keep_hi = (1.0 - trim_fraction) * duration;

    std::string label = session.segments.size() == 1
                            ? session.segments.front().label
                            : session.trace_id;
    if (label.empty()) label = std::to_string(s + 1);

    for (const auto& e : session.events) {
      const double mid = e.midpoint() - lo;
      if (trim && trim_fraction > 0.0 && (mid < keep_lo || mid > keep_hi)) {
        continue;
      }
      InteractionEvent moved = e;
      moved.start_time = e.start_time - lo + offset;
      moved.end_time = e.end_time - lo + offset;
      moved.segment = label;
      out.events.push_back(std::move(moved));
    }
    out.segments.push_back({label, offset, offset + duration});
    offset += duration;
  }
  detail::stable_sort_events(out.events);
  return out;
}

inline NormalizedTrace normalize_timeline(const Trace& trace) {
  if (trace.events.empty()) {
    throw ValidationError("cannot normalize an empty trace");
  }
  auto [lo, hi] = detail::extent(trace.events);
  const double span = hi - lo;
  if (!(span > 0.0)) {
    throw ValidationError("trace '" + trace.trace_id +
                          "' has zero time span; cannot rescale");
  }
  NormalizedTrace out;
  out.trace_id = trace.trace_id;
  out.events.reserve(trace.events.size());
  const double scale = 100.0 / span;
  for (const auto& e : trace.events) {
    InteractionEvent n = e;
    n.start_time = (e.start_time - lo) * scale;
    n.end_time = e.end_time == hi ? 100.0 : (e.end_time - lo) * scale;
    out.events.push_back(std::move(n));
  }
  return out;
}

inline NormalizedTrace normalize_timeline(const NormalizedTrace& trace) {
  return normalize_timeline(Trace{trace.trace_id, trace.events, {}});
}

// Bin of a midpoint on the percent timeline. The upper edge is closed so
// t = 100 lands in the last bin.
inline std::size_t bin_index(double midpoint, std::size_t bin_count) {
  const double width = 100.0 / static_cast<double>(bin_count);
  const double raw = std::floor(midpoint / width);
  if (raw <= 0.0) return 0;
  const auto idx = static_cast<std::size_t>(raw);
  return std::min(idx, bin_count - 1);
}

inline BinnedTrace bin_trace(const NormalizedTrace& trace,
                             std::size_t bin_count = 100) {
  if (bin_count == 0) throw ValidationError("bin count must be positive");
  BinnedTrace out;
  out.trace_id = trace.trace_id;
  out.bin_count = bin_count;
  out.bins.resize(bin_count);
  for (const auto& e : trace.events) {
    out.bins[bin_index(e.midpoint(), bin_count)].push_back(e);
    out.roster.push_back(e.speaker_id);
  }
  std::sort(out.roster.begin(), out.roster.end());
  out.roster.erase(std::unique(out.roster.begin(), out.roster.end()),
                   out.roster.end());
  return out;
}

inline nlohmann::ordered_json to_json(const BinnedTrace& binned) {
  nlohmann::ordered_json j;
  j["trace_id"] = binned.trace_id;
  j["bin_count"] = binned.bin_count;
  j["roster"] = binned.roster;
  auto& bins = j["bins"] = nlohmann::ordered_json::object();
  for (std::size_t b = 0; b < binned.bins.size(); ++b) {
    auto events = nlohmann::ordered_json::array();
    for (const auto& e : binned.bins[b]) events.push_back(event_to_json(e));
    bins[std::to_string(b)] = std::move(events);
  }
  return j;
}

}  // namespace slalom
