#include "bugflow/filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "bugflow/ingest.hpp"
#include "bugflow/numeric.hpp"
#include "bugflow/stats.hpp"
#include "json.hpp"

namespace bugflow {

std::string to_string(OutlierMode mode) {
  switch (mode) {
    case OutlierMode::none: return "none";
    case OutlierMode::mild: return "mild";
    case OutlierMode::extreme: return "extreme";
  }
  return "none";
}

OutlierMode parse_outlier_mode(const std::string& text) {
  if (text == "none") return OutlierMode::none;
  if (text == "mild") return OutlierMode::mild;
  if (text == "extreme") return OutlierMode::extreme;
  throw FilterError("unknown outlier mode '" + text + "' (valid: none, mild, extreme)");
}

void FilterConfig::validate() const {
  if (transient_threshold_seconds <= 0) throw FilterError("transient_threshold_seconds must be positive");
  if (inactivity_gap_days <= 0) throw FilterError("inactivity_gap_days must be positive");
}

FilterConfig parse_filter_config(const std::string& json_text) {
  FilterConfig c;
  try {
    const auto j = nlohmann::json::parse(json_text);
    if (j.contains("allowed_statuses")) {
      c.allowed_statuses.clear();
      for (const auto& s : j.at("allowed_statuses")) c.allowed_statuses.insert(s.get<std::string>());
    }
    c.transient_threshold_seconds = j.value("transient_threshold_seconds", c.transient_threshold_seconds);
    c.inactivity_gap_days = j.value("inactivity_gap_days", c.inactivity_gap_days);
    if (j.contains("outlier_mode")) c.outlier_mode = parse_outlier_mode(j.at("outlier_mode").get<std::string>());
    c.inactivity_enabled = j.value("inactivity_filter", c.inactivity_enabled);
  } catch (const nlohmann::json::exception& e) {
    throw FilterError(std::string("malformed filter config: ") + e.what());
  }
  c.validate();
  return c;
}

std::size_t FilterReport::removed_total() const {
  std::size_t n = 0;
  for (const auto& [rule, count] : removed_by_rule) n += count;
  return n;
}

FilterReport chain(const FilterReport& earlier, const FilterReport& later) {
  FilterReport r = earlier;
  r.kept_count = later.kept_count;
  for (const auto& [rule, count] : later.removed_by_rule) r.removed_by_rule[rule] += count;
  r.merged_transient_states += later.merged_transient_states;
  r.merged_loops += later.merged_loops;
  r.dropped_undefined_states += later.dropped_undefined_states;
  r.truncated_tails += later.truncated_tails;
  return r;
}

namespace {

// A stage interval that remembers who moved the bug into it, so transitions
// can be rebuilt after intervals are merged away.
struct Segment {
  std::string state;
  Timestamp entered = 0;
  std::optional<Timestamp> exited;
  std::string entry_actor;
};

std::vector<Segment> to_segments(const BugRecord& bug) {
  const auto intervals = extract_stage_intervals(bug);
  std::vector<Segment> segs;
  segs.reserve(intervals.size());
  for (std::size_t k = 0; k < intervals.size(); ++k) {
    segs.push_back({intervals[k].state, intervals[k].entered_at, intervals[k].exited_at,
                    k == 0 ? std::string() : bug.transitions[k - 1].actor_id});
  }
  return segs;
}

BugRecord with_segments(const BugRecord& bug, const std::vector<Segment>& segs) {
  BugRecord out = bug;
  out.transitions.clear();
  for (std::size_t k = 1; k < segs.size(); ++k) {
    out.transitions.push_back({segs[k - 1].state, segs[k].state, segs[k].entered, segs[k].entry_actor});
  }
  return out;
}

Filtered keep_if(const Corpus& corpus, const std::string& rule, auto&& keep) {
  Filtered f;
  f.report.input_count = corpus.size();
  for (const auto& bug : corpus) {
    if (keep(bug)) f.corpus.push_back(bug);
  }
  f.report.kept_count = f.corpus.size();
  f.report.removed_by_rule[rule] = corpus.size() - f.corpus.size();
  return f;
}

}  // namespace

Filtered filter_resolution_status(const Corpus& corpus, const std::set<std::string>& allowed) {
  return keep_if(corpus, "resolution_status",
                 [&allowed](const BugRecord& b) { return allowed.count(b.resolution_status) != 0; });
}

BugRecord truncate_after_closed(const BugRecord& bug, const std::string& terminal, std::size_t* truncated) {
  auto it = std::find_if(bug.transitions.begin(), bug.transitions.end(),
                         [&terminal](const StateTransition& t) { return t.to_state == terminal; });
  if (it == bug.transitions.end() || std::next(it) == bug.transitions.end()) return bug;
  BugRecord out = bug;
  out.transitions.erase(out.transitions.begin() + (std::next(it) - bug.transitions.begin()), out.transitions.end());
  if (truncated) ++*truncated;
  return out;
}

BugRecord drop_undefined_states(const BugRecord& bug, const WorkflowSpec& spec, std::size_t* dropped) {
  const auto segs = to_segments(bug);
  if (!spec.has_state(segs.front().state)) {
    throw FilterError("bug " + bug.id + ": first state '" + segs.front().state + "' is not in workflow " + spec.name);
  }
  std::vector<Segment> kept;
  kept.reserve(segs.size());
  std::size_t removed = 0;
  for (const auto& s : segs) {
    if (spec.has_state(s.state)) {
      kept.push_back(s);
    } else {
      kept.back().exited = s.exited;  // the previous defined state absorbs the time
      ++removed;
    }
  }
  if (removed == 0) return bug;
  if (dropped) *dropped += removed;
  return with_segments(bug, kept);
}

BugRecord merge_transient_states(const BugRecord& bug, std::int64_t threshold_seconds, std::size_t* merged) {
  const auto segs = to_segments(bug);
  std::vector<Segment> kept;
  kept.reserve(segs.size());
  std::size_t removed = 0;
  for (std::size_t k = 0; k < segs.size(); ++k) {
    const auto& s = segs[k];
    const bool interior = k > 0 && s.exited.has_value();
    if (interior && *s.exited - s.entered < threshold_seconds) {
      kept.back().exited = s.exited;
      ++removed;
    } else {
      kept.push_back(s);
    }
  }
  if (removed == 0) return bug;
  if (merged) *merged += removed;
  return with_segments(bug, kept);
}

BugRecord merge_loops(const BugRecord& bug, std::size_t* merged) {
  const auto segs = to_segments(bug);
  std::vector<Segment> kept;
  kept.reserve(segs.size());
  std::size_t removed = 0;
  for (const auto& s : segs) {
    if (!kept.empty() && kept.back().state == s.state) {
      kept.back().exited = s.exited;
      ++removed;
    } else {
      kept.push_back(s);
    }
  }
  if (removed == 0) return bug;
  if (merged) *merged += removed;
  return with_segments(bug, kept);
}

Filtered apply_standard_pipeline(const Corpus& corpus, const FilterConfig& config, const WorkflowSpec& spec) {
  config.validate();
  Filtered f = filter_resolution_status(corpus, config.allowed_statuses);
  for (auto& bug : f.corpus) {
    bug = truncate_after_closed(bug, spec.terminal, &f.report.truncated_tails);
    bug = drop_undefined_states(bug, spec, &f.report.dropped_undefined_states);
    bug = merge_transient_states(bug, config.transient_threshold_seconds, &f.report.merged_transient_states);
    bug = merge_loops(bug, &f.report.merged_loops);
  }
  return f;
}

Fences tukey_fences(std::vector<double> hours, OutlierMode mode) {
  if (hours.size() < 4) throw FilterError("outlier filter needs at least 4 bugs, got " + std::to_string(hours.size()));
  std::sort(hours.begin(), hours.end());
  Fences f;
  f.q1 = quantile_sorted(hours, 0.25);
  f.q3 = quantile_sorted(hours, 0.75);
  f.iqr = f.q3 - f.q1;
  switch (mode) {
    case OutlierMode::none:
      f.lower = -std::numeric_limits<double>::infinity();
      f.upper = std::numeric_limits<double>::infinity();
      break;
    case OutlierMode::mild:
      f.lower = f.q1 - 1.5 * f.iqr;
      f.upper = f.q3 + 1.5 * f.iqr;
      break;
    case OutlierMode::extreme:
      f.lower = -std::numeric_limits<double>::infinity();
      f.upper = f.q3 + 3.0 * f.iqr;
      break;
  }
  return f;
}

Filtered tukey_outlier_filter(const Corpus& corpus, OutlierMode mode, const std::string& terminal) {
  std::vector<double> hours;
  hours.reserve(corpus.size());
  for (const auto& bug : corpus) hours.push_back(resolution_time(bug, terminal));
  const Fences fences = tukey_fences(hours, mode);
  Filtered f;
  f.report.input_count = corpus.size();
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (hours[i] >= fences.lower && hours[i] <= fences.upper) f.corpus.push_back(corpus[i]);
  }
  f.report.kept_count = f.corpus.size();
  f.report.removed_by_rule["outlier_" + to_string(mode)] = corpus.size() - f.corpus.size();
  return f;
}

Filtered inactivity_filter(const Corpus& corpus, int gap_days, const std::string& terminal) {
  if (gap_days <= 0) throw FilterError("inactivity gap must be positive");
  const Timestamp max_gap = Timestamp{gap_days} * 86400;
  return keep_if(corpus, "inactivity", [&](const BugRecord& bug) {
    const auto end = first_terminal_entry(bug, terminal);
    std::vector<Timestamp> events;
    events.reserve(bug.event_times.size() + 2);
    events.push_back(bug.created_at);
    for (Timestamp t : bug.event_times) {
      if (!end || t <= *end) events.push_back(t);
    }
    if (end) events.push_back(*end);
    std::sort(events.begin(), events.end());
    for (std::size_t i = 1; i < events.size(); ++i) {
      if (events[i] - events[i - 1] > max_gap) return false;
    }
    return true;
  });
}

Filtered apply_configured_filters(const Corpus& corpus, const FilterConfig& config, const WorkflowSpec& spec) {
  Filtered f = apply_standard_pipeline(corpus, config, spec);
  if (config.outlier_mode != OutlierMode::none) {
    Filtered next = tukey_outlier_filter(f.corpus, config.outlier_mode, spec.terminal);
    f.report = chain(f.report, next.report);
    f.corpus = std::move(next.corpus);
  }
  if (config.inactivity_enabled) {
    Filtered next = inactivity_filter(f.corpus, config.inactivity_gap_days, spec.terminal);
    f.report = chain(f.report, next.report);
    f.corpus = std::move(next.corpus);
  }
  return f;
}

}  // namespace bugflow
