#include "bugflow/stats.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "bugflow/ingest.hpp"
#include "bugflow/numeric.hpp"

namespace bugflow {

std::optional<Timestamp> first_terminal_entry(const BugRecord& bug, const std::string& terminal) {
  for (const auto& t : bug.transitions) {
    if (t.to_state == terminal) return t.at;
  }
  return std::nullopt;
}

double resolution_time(const BugRecord& bug, const std::string& terminal) {
  const auto entry = first_terminal_entry(bug, terminal);
  if (!entry) throw NotResolvedError("bug " + bug.id + " never reaches " + terminal);
  return seconds_to_hours(*entry - bug.created_at);
}

std::string join_path(const std::vector<std::string>& path, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i) out += sep;
    out += path[i];
  }
  return out;
}

StatusTable resolution_status_table(const Corpus& corpus, const std::set<int>& priorities) {
  StatusTable table;
  std::map<int, std::map<std::string, std::size_t>> counts;
  for (const auto& bug : corpus) {
    if (priorities.count(bug.priority)) {
      ++counts[bug.priority][bug.resolution_status];
      ++table.stratum_size[bug.priority];
    }
  }
  for (int p : priorities) {
    auto it = counts.find(p);
    if (it == counts.end()) {
      table.warnings.push_back("priority " + std::to_string(p) + " has no bugs; omitted");
      continue;
    }
    const double total = static_cast<double>(table.stratum_size[p]);
    for (const auto& [status, n] : it->second) {
      table.percent[{p, status}] = 100.0 * static_cast<double>(n) / total;
    }
  }
  return table;
}

std::vector<PathCount> path_frequencies(const Corpus& corpus, const std::string& initial) {
  std::map<std::vector<std::string>, std::size_t> counts;
  for (const auto& bug : corpus) {
    std::vector<std::string> path;
    path.reserve(bug.transitions.size() + 1);
    path.push_back(bug.transitions.empty() ? initial : bug.transitions.front().from_state);
    for (const auto& t : bug.transitions) path.push_back(t.to_state);
    ++counts[path];
  }
  std::vector<PathCount> out;
  out.reserve(counts.size());
  const double total = static_cast<double>(corpus.size());
  for (auto& [path, n] : counts) out.push_back({path, n, static_cast<double>(n) / total});
  // counts is keyed by path, so a stable sort on count keeps ties lexicographic
  std::stable_sort(out.begin(), out.end(), [](const PathCount& a, const PathCount& b) { return a.count > b.count; });
  return out;
}

std::map<TransitionKey, DurationStat> transition_duration_stats(const Corpus& corpus) {
  std::map<TransitionKey, std::vector<double>> samples;
  for (const auto& bug : corpus) {
    const auto intervals = extract_stage_intervals(bug);
    for (std::size_t k = 0; k < bug.transitions.size(); ++k) {
      const auto& t = bug.transitions[k];
      samples[{t.from_state, t.to_state}].push_back(intervals[k].duration_hours);
    }
  }
  std::map<TransitionKey, DurationStat> out;
  for (auto& [key, hours] : samples) {
    out[key] = DurationStat{mean(hours), median(hours), hours.size()};
  }
  return out;
}

EntityRole parse_entity_role(const std::string& text) {
  if (text == "reporter") return EntityRole::reporter;
  if (text == "assignee") return EntityRole::assignee;
  throw Error("unknown role '" + text + "' (valid: reporter, assignee)");
}

EntityImpact entity_impact(const Corpus& corpus, EntityRole role, std::size_t top_n, int order_priority,
                           const std::string& terminal) {
  std::map<std::string, std::map<int, std::vector<double>>> by_entity;
  for (const auto& bug : corpus) {
    const auto entry = first_terminal_entry(bug, terminal);
    if (!entry) continue;
    if (role == EntityRole::assignee && !bug.is_assigned()) continue;
    const std::string& id = role == EntityRole::reporter ? bug.reporter_id : bug.assignee_id;
    by_entity[id][bug.priority].push_back(seconds_to_hours(*entry - bug.created_at));
  }

  std::vector<EntityStat> all;
  all.reserve(by_entity.size());
  for (auto& [id, per_priority] : by_entity) {
    EntityStat stat{id, 0, {}};
    for (auto& [p, hours] : per_priority) {
      stat.total_count += hours.size();
      stat.per_priority[p] = PriorityStat{hours.size(), median(hours)};
    }
    all.push_back(std::move(stat));
  }

  EntityImpact impact;
  // by_entity is id-ordered, so the stable sort breaks count ties by id
  std::stable_sort(all.begin(), all.end(),
                   [](const EntityStat& a, const EntityStat& b) { return a.total_count > b.total_count; });
  if (all.size() < top_n) {
    impact.warnings.push_back("only " + std::to_string(all.size()) + " entities available, fewer than top " +
                              std::to_string(top_n));
  } else {
    all.resize(top_n);
  }

  auto key = [order_priority](const EntityStat& s) -> std::optional<double> {
    auto it = s.per_priority.find(order_priority);
    if (it == s.per_priority.end()) return std::nullopt;
    return it->second.median_hours;
  };
  std::sort(all.begin(), all.end(), [&key](const EntityStat& a, const EntityStat& b) {
    const auto ka = key(a);
    const auto kb = key(b);
    if (ka.has_value() != kb.has_value()) return ka.has_value();
    if (ka && *ka != *kb) return *ka < *kb;
    return a.entity_id < b.entity_id;
  });
  impact.entities = std::move(all);
  return impact;
}

std::optional<double> median_spread(const EntityImpact& impact, int priority) {
  std::optional<double> lo, hi;
  for (const auto& e : impact.entities) {
    auto it = e.per_priority.find(priority);
    if (it == e.per_priority.end()) continue;
    const double m = it->second.median_hours;
    lo = lo ? std::min(*lo, m) : m;
    hi = hi ? std::max(*hi, m) : m;
  }
  if (!lo || *lo <= 0.0) return std::nullopt;
  return *hi / *lo;
}

SelfAssignment self_assignment_comparison(const Corpus& corpus, const std::string& terminal) {
  SelfAssignment out;
  std::map<int, std::map<std::string, std::vector<double>>> samples;
  for (const auto& bug : corpus) {
    if (!bug.is_assigned()) {
      ++out.unassigned_skipped;
      continue;
    }
    const auto entry = first_terminal_entry(bug, terminal);
    if (!entry) continue;
    const char* group = bug.reporter_id == bug.assignee_id ? "self" : "other";
    samples[bug.priority][group].push_back(seconds_to_hours(*entry - bug.created_at));
  }
  if (out.unassigned_skipped) {
    out.warnings.push_back(std::to_string(out.unassigned_skipped) + " unassigned bugs skipped");
  }
  for (auto& [p, groups] : samples) {
    for (const char* g : {"self", "other"}) {
      auto it = groups.find(g);
      if (it == groups.end()) {
        out.warnings.push_back("priority " + std::to_string(p) + ": group " + g + " is empty; omitted");
        continue;
      }
      out.groups[p][g] = PriorityStat{it->second.size(), median(it->second)};
    }
  }
  return out;
}

std::vector<double> default_occupancy_grid() {
  std::vector<double> grid{0.0};
  const auto tail = log_grid(1.0, 10000.0, 200);
  grid.insert(grid.end(), tail.begin(), tail.end());
  return grid;
}

OccupancyCurve occupancy_curve(const Corpus& corpus, const std::vector<double>& grid_hours,
                               const std::string& initial, const std::string& terminal) {
  if (!std::is_sorted(grid_hours.begin(), grid_hours.end()) || (!grid_hours.empty() && grid_hours.front() < 0.0)) {
    throw Error("occupancy grid must be ascending and non-negative");
  }
  OccupancyCurve curve;
  curve.grid_hours = grid_hours;
  if (corpus.empty()) return curve;

  const std::size_t g = grid_hours.size();
  std::map<std::string, std::vector<std::size_t>> counts;
  counts[initial].assign(g, 0);
  counts[terminal].assign(g, 0);
  for (const auto& bug : corpus) {
    const auto intervals = extract_stage_intervals(bug, initial);
    const auto closed_at = first_terminal_entry(bug, terminal);
    std::size_t k = 0;
    for (std::size_t i = 0; i < g; ++i) {
      const double at = static_cast<double>(bug.created_at) + grid_hours[i] * kSecondsPerHour;
      const std::string* state = nullptr;
      if (closed_at && at >= static_cast<double>(*closed_at)) {
        state = &terminal;
      } else {
        while (k + 1 < intervals.size() && at >= static_cast<double>(intervals[k + 1].entered_at)) ++k;
        state = &intervals[k].state;
      }
      auto& row = counts[*state];
      if (row.empty()) row.assign(g, 0);
      ++row[i];
    }
  }
  const double n = static_cast<double>(corpus.size());
  for (const auto& [state, row] : counts) {
    auto& frac = curve.per_state_fraction[state];
    frac.resize(g);
    for (std::size_t i = 0; i < g; ++i) frac[i] = static_cast<double>(row[i]) / n;
  }
  return curve;
}

}  // namespace bugflow
