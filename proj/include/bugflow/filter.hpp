#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <string>

#include "bugflow/types.hpp"

namespace bugflow {

class FilterError : public Error {
 public:
  using Error::Error;
};

enum class OutlierMode { none, mild, extreme };

std::string to_string(OutlierMode mode);
OutlierMode parse_outlier_mode(const std::string& text);

struct FilterConfig {
  std::set<std::string> allowed_statuses{"Done", "Fixed"};
  std::int64_t transient_threshold_seconds = 300;
  int inactivity_gap_days = 30;
  OutlierMode outlier_mode = OutlierMode::none;
  /// The inactivity prefilter only runs when enabled.
  bool inactivity_enabled = false;

  void validate() const;
};

/// Loads a FilterConfig from a JSON object; absent keys keep their defaults.
FilterConfig parse_filter_config(const std::string& json_text);

struct FilterReport {
  std::size_t input_count = 0;
  std::size_t kept_count = 0;
  std::map<std::string, std::size_t> removed_by_rule;
  std::size_t merged_transient_states = 0;
  std::size_t merged_loops = 0;
  std::size_t dropped_undefined_states = 0;
  std::size_t truncated_tails = 0;

  std::size_t removed_total() const;
  bool reconciles() const { return kept_count + removed_total() == input_count; }
  bool operator==(const FilterReport&) const = default;
};

/// Chains two reports: `later` ran on the output of `earlier`.
FilterReport chain(const FilterReport& earlier, const FilterReport& later);

struct Filtered {
  Corpus corpus;
  FilterReport report;
};

Filtered filter_resolution_status(const Corpus& corpus, const std::set<std::string>& allowed);

// Per-bug rules. The optional counter receives the number of tails cut,
// intervals dropped or merged.
BugRecord truncate_after_closed(const BugRecord& bug, const std::string& terminal,
                                std::size_t* truncated = nullptr);
BugRecord drop_undefined_states(const BugRecord& bug, const WorkflowSpec& spec,
                                std::size_t* dropped = nullptr);
BugRecord merge_transient_states(const BugRecord& bug, std::int64_t threshold_seconds,
                                 std::size_t* merged = nullptr);
BugRecord merge_loops(const BugRecord& bug, std::size_t* merged = nullptr);

/// Resolution status -> truncate after terminal -> drop undefined states ->
/// merge transient states -> merge loops.
Filtered apply_standard_pipeline(const Corpus& corpus, const FilterConfig& config, const WorkflowSpec& spec);

struct Fences {
  double q1 = 0, q3 = 0, iqr = 0;
  double lower = 0, upper = 0;  // lower is -inf for extreme mode
};

Fences tukey_fences(std::vector<double> resolution_hours, OutlierMode mode);

/// Every bug must reach `terminal`. Needs at least four bugs.
Filtered tukey_outlier_filter(const Corpus& corpus, OutlierMode mode, const std::string& terminal = "Closed");

/// Drops bugs with a gap longer than gap_days between consecutive edits,
/// counted from creation up to the first entry into `terminal`.
Filtered inactivity_filter(const Corpus& corpus, int gap_days, const std::string& terminal = "Closed");

/// Standard pipeline followed by the configured outlier and inactivity
/// prefilters.
Filtered apply_configured_filters(const Corpus& corpus, const FilterConfig& config, const WorkflowSpec& spec);

}  // namespace bugflow
