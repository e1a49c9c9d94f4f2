#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bugflow {

/// UTC seconds since the Unix epoch.
using Timestamp = std::int64_t;

inline constexpr double kSecondsPerHour = 3600.0;
inline constexpr const char* kUnassigned = "<unassigned>";

inline double seconds_to_hours(Timestamp seconds) {
  return static_cast<double>(seconds) / kSecondsPerHour;
}

/// Base for every error raised by the library. The CLI maps these to the
/// data-error exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ChangelogEntry {
  std::string field_name;
  std::string from_value;
  std::string to_value;
  Timestamp at = 0;
  std::string actor_id;

  bool operator==(const ChangelogEntry&) const = default;
};

/// One issue exactly as it appears in an export file.
struct RawIssueRecord {
  std::string issue_key;
  std::string issue_type;
  std::string project;
  std::string subproject;
  std::string priority_label;
  std::string reporter_id;
  std::string assignee_id;
  Timestamp created_at = 0;
  std::string resolution_status;
  Timestamp last_update_at = 0;
  std::vector<ChangelogEntry> changelog;

  bool operator==(const RawIssueRecord&) const = default;
};

struct StateTransition {
  std::string from_state;
  std::string to_state;
  Timestamp at = 0;
  std::string actor_id;

  bool operator==(const StateTransition&) const = default;
};

struct BugRecord {
  std::string id;
  std::string project;
  std::string subproject;
  int priority = 3;  // 1 = highest
  std::string reporter_id;
  std::string assignee_id = kUnassigned;
  Timestamp created_at = 0;
  std::string resolution_status;
  Timestamp last_update_at = 0;
  std::vector<StateTransition> transitions;
  std::vector<Timestamp> event_times;  // every recorded edit, creation included

  bool is_assigned() const { return assignee_id != kUnassigned; }
  bool operator==(const BugRecord&) const = default;
};

using Corpus = std::vector<BugRecord>;

/// Time spent in one state. `exited_at` is empty for the final, still-open
/// interval, whose duration is reported as zero.
struct StageInterval {
  std::string state;
  Timestamp entered_at = 0;
  std::optional<Timestamp> exited_at;
  double duration_hours = 0.0;

  bool bounded() const { return exited_at.has_value(); }
  bool operator==(const StageInterval&) const = default;
};

using TransitionKey = std::pair<std::string, std::string>;

struct WorkflowSpec {
  std::string name;
  std::set<std::string> states;
  std::string initial;
  std::string terminal;
  std::set<TransitionKey> allowed_transitions;

  bool has_state(const std::string& s) const { return states.count(s) != 0; }
  bool allows(const std::string& from, const std::string& to) const {
    return allowed_transitions.count({from, to}) != 0;
  }
};

struct ProjectProfile {
  WorkflowSpec workflow;
  /// Ordered so the reverse lookup (priority -> label) is deterministic: the
  /// first label listed for a priority wins.
  std::vector<std::pair<std::string, int>> priority_map;
  std::set<std::string> allowed_issue_types{"Bug"};

  std::optional<int> priority_of(const std::string& label) const;
  std::string label_of(int priority) const;
};

}  // namespace bugflow
