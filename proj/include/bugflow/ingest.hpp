#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "bugflow/types.hpp"

namespace bugflow {

/// A record in an export stream that could not be decoded. `record_index` is
/// 1-based and counts non-blank lines.
class IngestError : public Error {
 public:
  IngestError(std::size_t record_index, std::string field, const std::string& what)
      : Error("record " + std::to_string(record_index) + ": " + what),
        record_index_(record_index),
        field_(std::move(field)) {}

  std::size_t record_index() const { return record_index_; }
  const std::string& field() const { return field_; }

 private:
  std::size_t record_index_;
  std::string field_;
};

class ProfileError : public Error {
 public:
  using Error::Error;
};

/// Accepts integer epoch seconds or ISO-8601 ("2023-04-05T10:00:00Z",
/// optional fractional seconds, optional "+hh:mm" / "+hhmm" offset, or a bare
/// date). Throws std::invalid_argument on anything else.
Timestamp parse_timestamp(std::string_view text);
std::string format_timestamp_iso(Timestamp t);

/// Reads line-delimited records. Blank lines are ignored.
std::vector<RawIssueRecord> parse_export(std::istream& in);
std::vector<RawIssueRecord> parse_export_file(const std::filesystem::path& path);

/// Inverse of parse_export. Timestamps are written as epoch seconds.
void serialize_export(const std::vector<RawIssueRecord>& records, std::ostream& out);

struct Skipped {
  std::string reason;  // "non_bug"
};

using Conversion = std::variant<BugRecord, Skipped>;

/// Normalizes one raw record. Throws Error when the priority label is unknown
/// or the status history does not start in the workflow's initial state.
Conversion to_bug_record(const RawIssueRecord& raw, const ProjectProfile& profile);

/// Writes a BugRecord back into the export shape: status changes become
/// "status" changelog entries, the remaining event times become "edit"
/// entries. to_bug_record(to_raw_record(b)) == b for any valid b.
RawIssueRecord to_raw_record(const BugRecord& bug, const ProjectProfile& profile);

struct IngestResult {
  Corpus bugs;
  std::vector<std::pair<std::string, std::string>> skipped;  // (issue_key, reason)
};

IngestResult ingest(const std::vector<RawIssueRecord>& raw, const ProjectProfile& profile);

/// Splits a bug's history into abutting per-state intervals. The first
/// interval starts at creation in `initial` (or in the first transition's
/// source state when there are transitions).
std::vector<StageInterval> extract_stage_intervals(const BugRecord& bug,
                                                   const std::string& initial = "Open");

/// Names accepted by builtin_workflow.
const std::vector<std::string>& builtin_workflow_names();
WorkflowSpec builtin_workflow(const std::string& name);

/// A profile for one of the built-in workflows with the Jira default priority
/// labels (Highest..Lowest) plus the Apache-style labels (Blocker..Trivial).
ProjectProfile default_profile(const std::string& workflow_name);

/// Profile file: JSON object with "workflow" (a built-in name or an inline
/// {"name","states","initial","terminal","transitions"} object),
/// "priorities" (array of [label, level] pairs or an object label->level) and
/// optional "issue_types".
ProjectProfile load_profile(const std::filesystem::path& path);
ProjectProfile parse_profile(std::string_view json_text);

void validate(const WorkflowSpec& spec);

}  // namespace bugflow
