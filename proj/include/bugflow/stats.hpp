#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bugflow/types.hpp"

namespace bugflow {

class NotResolvedError : public Error {
 public:
  using Error::Error;
};

std::optional<Timestamp> first_terminal_entry(const BugRecord& bug, const std::string& terminal);

/// Hours from creation to the first entry into `terminal`.
double resolution_time(const BugRecord& bug, const std::string& terminal = "Closed");

struct DurationStat {
  double mean_hours = 0.0;
  double median_hours = 0.0;
  std::size_t count = 0;
};

struct PathCount {
  std::vector<std::string> path;
  std::size_t count = 0;
  double fraction = 0.0;
};

std::string join_path(const std::vector<std::string>& path, const std::string& sep = "-");

struct StatusTable {
  /// (priority, status) -> percentage of that priority's bugs.
  std::map<std::pair<int, std::string>, double> percent;
  std::map<int, std::size_t> stratum_size;
  std::vector<std::string> warnings;
};

StatusTable resolution_status_table(const Corpus& corpus, const std::set<int>& priorities);

/// Sorted by descending count, ties by path.
std::vector<PathCount> path_frequencies(const Corpus& corpus, const std::string& initial = "Open");

/// Sojourn in `from` immediately before each observed from -> to transition.
std::map<TransitionKey, DurationStat> transition_duration_stats(const Corpus& corpus);

enum class EntityRole { reporter, assignee };

EntityRole parse_entity_role(const std::string& text);

struct PriorityStat {
  std::size_t count = 0;
  double median_hours = 0.0;
};

struct EntityStat {
  std::string entity_id;
  std::size_t total_count = 0;
  std::map<int, PriorityStat> per_priority;
};

struct EntityImpact {
  std::vector<EntityStat> entities;  // ascending by median of the ordering priority
  std::vector<std::string> warnings;
};

/// Picks the top_n entities by resolved-bug count (ties by id) and orders them
/// by the median resolution time of their `order_priority` bugs. Entities
/// without such bugs go last. Unresolved bugs and UNASSIGNED are ignored.
EntityImpact entity_impact(const Corpus& corpus, EntityRole role, std::size_t top_n, int order_priority,
                           const std::string& terminal = "Closed");

/// Slowest over fastest median among the entities that have `priority` bugs.
std::optional<double> median_spread(const EntityImpact& impact, int priority);

struct SelfAssignment {
  /// priority -> {"self" | "other"} -> stat
  std::map<int, std::map<std::string, PriorityStat>> groups;
  std::size_t unassigned_skipped = 0;
  std::vector<std::string> warnings;
};

SelfAssignment self_assignment_comparison(const Corpus& corpus, const std::string& terminal = "Closed");

struct OccupancyCurve {
  std::vector<double> grid_hours;
  std::map<std::string, std::vector<double>> per_state_fraction;
};

/// t = 0 followed by 200 log-spaced points from 1 h to 10,000 h.
std::vector<double> default_occupancy_grid();

/// Fraction of bugs in each state at each offset from creation. Once a bug
/// first reaches `terminal` it stays there.
OccupancyCurve occupancy_curve(const Corpus& corpus, const std::vector<double>& grid_hours,
                               const std::string& initial = "Open", const std::string& terminal = "Closed");

}  // namespace bugflow
