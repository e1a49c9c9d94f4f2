#include "bugflow/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace bugflow {

using nlohmann::json;

std::optional<int> ProjectProfile::priority_of(const std::string& label) const {
  for (const auto& [name, level] : priority_map) {
    if (name == label) return level;
  }
  return std::nullopt;
}

std::string ProjectProfile::label_of(int priority) const {
  for (const auto& [name, level] : priority_map) {
    if (level == priority) return name;
  }
  throw ProfileError("profile has no label for priority " + std::to_string(priority));
}

// ---------------------------------------------------------------------------
// timestamps

namespace {

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

int read_fixed(std::string_view s, std::size_t pos, std::size_t len) {
  if (pos + len > s.size() || !all_digits(s.substr(pos, len))) {
    throw std::invalid_argument("bad timestamp '" + std::string(s) + "'");
  }
  int value = 0;
  std::from_chars(s.data() + pos, s.data() + pos + len, value);
  return value;
}

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
  std::string_view s = text;
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  if (s.empty()) throw std::invalid_argument("empty timestamp");

  if (all_digits(s) || (s.front() == '-' && all_digits(s.substr(1)))) {
    Timestamp value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{}) throw std::invalid_argument("timestamp out of range");
    return value;
  }

  // YYYY-MM-DD[(T| )hh:mm[:ss[.fff]]][Z|(+|-)hh[:]mm]
  const int y = read_fixed(s, 0, 4);
  if (s.size() < 10 || s[4] != '-' || s[7] != '-') {
    throw std::invalid_argument("bad timestamp '" + std::string(s) + "'");
  }
  const int mo = read_fixed(s, 5, 2);
  const int d = read_fixed(s, 8, 2);
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) throw std::invalid_argument("invalid date '" + std::string(s) + "'");
  Timestamp result = sys_days{ymd}.time_since_epoch().count() * Timestamp{86400};

  std::size_t pos = 10;
  if (pos == s.size()) return result;
  if (s[pos] != 'T' && s[pos] != ' ') throw std::invalid_argument("bad timestamp '" + std::string(s) + "'");
  ++pos;
  const int hh = read_fixed(s, pos, 2);
  if (pos + 2 >= s.size() || s[pos + 2] != ':') throw std::invalid_argument("bad time '" + std::string(s) + "'");
  const int mm = read_fixed(s, pos + 3, 2);
  pos += 5;
  int ss = 0;
  if (pos < s.size() && s[pos] == ':') {
    ss = read_fixed(s, pos + 1, 2);
    pos += 3;
    if (pos < s.size() && (s[pos] == '.' || s[pos] == ',')) {
      ++pos;
      while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;  // sub-second part dropped
    }
  }
  if (hh > 23 || mm > 59 || ss > 60) throw std::invalid_argument("bad time '" + std::string(s) + "'");
  result += hh * 3600 + mm * 60 + ss;

  if (pos == s.size()) return result;
  if (s[pos] == 'Z' && pos + 1 == s.size()) return result;
  if (s[pos] != '+' && s[pos] != '-') throw std::invalid_argument("bad zone in '" + std::string(s) + "'");
  const int sign = s[pos] == '+' ? 1 : -1;
  const int oh = read_fixed(s, pos + 1, 2);
  std::size_t mpos = pos + 3;
  if (mpos < s.size() && s[mpos] == ':') ++mpos;
  const int om = mpos < s.size() ? read_fixed(s, mpos, 2) : 0;
  if (mpos < s.size() && mpos + 2 != s.size()) throw std::invalid_argument("bad zone in '" + std::string(s) + "'");
  return result - sign * (oh * 3600 + om * 60);
}

std::string format_timestamp_iso(Timestamp t) {
  using namespace std::chrono;
  const auto days_since = static_cast<int>((t >= 0 ? t : t - 86399) / 86400);
  const sys_days day_point{days{days_since}};
  const year_month_day ymd{day_point};
  const Timestamp rem = t - Timestamp{days_since} * 86400;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(rem / 3600), static_cast<int>(rem % 3600 / 60), static_cast<int>(rem % 60));
  return buf;
}

// ---------------------------------------------------------------------------
// export format

namespace {

const json* find(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

std::string required_string(const json& obj, const char* key, std::size_t index) {
  const json* v = find(obj, key);
  if (v == nullptr) throw IngestError(index, key, std::string("missing ") + key);
  if (!v->is_string()) throw IngestError(index, key, std::string("field ") + key + " is not a string");
  return v->get<std::string>();
}

std::string optional_string(const json& obj, const char* key, std::size_t index) {
  const json* v = find(obj, key);
  if (v == nullptr || v->is_null()) return {};
  if (!v->is_string()) throw IngestError(index, key, std::string("field ") + key + " is not a string");
  return v->get<std::string>();
}

Timestamp required_time(const json& obj, const char* key, std::size_t index, const std::string& where) {
  const json* v = find(obj, key);
  if (v == nullptr) throw IngestError(index, key, "missing " + where + key);
  if (v->is_number_integer()) return v->get<Timestamp>();
  if (v->is_string()) {
    try {
      return parse_timestamp(v->get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw IngestError(index, key, "field " + where + key + ": " + e.what());
    }
  }
  throw IngestError(index, key, "field " + where + key + " is not a timestamp");
}

RawIssueRecord decode_record(const json& obj, std::size_t index) {
  if (!obj.is_object()) throw IngestError(index, "", "record is not an object");
  RawIssueRecord r;
  r.issue_key = required_string(obj, "issue_key", index);
  r.issue_type = required_string(obj, "issue_type", index);
  r.project = required_string(obj, "project", index);
  r.subproject = optional_string(obj, "subproject", index);
  r.priority_label = required_string(obj, "priority_label", index);
  r.reporter_id = required_string(obj, "reporter_id", index);
  r.assignee_id = optional_string(obj, "assignee_id", index);
  r.created_at = required_time(obj, "created_at", index, "");
  r.resolution_status = required_string(obj, "resolution_status", index);
  r.last_update_at = required_time(obj, "last_update_at", index, "");

  const json* log = find(obj, "changelog");
  if (log == nullptr) throw IngestError(index, "changelog", "missing changelog");
  if (!log->is_array()) throw IngestError(index, "changelog", "field changelog is not an array");
  std::size_t k = 0;
  for (const json& e : *log) {
    const std::string where = "changelog[" + std::to_string(k) + "].";
    if (!e.is_object()) throw IngestError(index, "changelog", where + " is not an object");
    ChangelogEntry entry;
    const json* f = find(e, "field_name");
    if (f == nullptr || !f->is_string()) throw IngestError(index, "changelog", "missing " + where + "field_name");
    entry.field_name = f->get<std::string>();
    entry.from_value = optional_string(e, "from_value", index);
    entry.to_value = optional_string(e, "to_value", index);
    entry.actor_id = optional_string(e, "actor_id", index);
    entry.at = required_time(e, "at", index, where);
    r.changelog.push_back(std::move(entry));
    ++k;
  }

  for (std::size_t i = 0; i < r.changelog.size(); ++i) {
    const Timestamp at = r.changelog[i].at;
    if (i > 0 && at < r.changelog[i - 1].at) {
      throw IngestError(index, "changelog", "changelog entry " + std::to_string(i) + " is out of order");
    }
    if (at < r.created_at) {
      throw IngestError(index, "changelog", "changelog entry " + std::to_string(i) + " precedes created_at");
    }
    if (at > r.last_update_at) {
      throw IngestError(index, "last_update_at", "changelog entry " + std::to_string(i) + " follows last_update_at");
    }
  }
  if (r.created_at > r.last_update_at) {
    throw IngestError(index, "last_update_at", "last_update_at precedes created_at");
  }
  return r;
}

}  // namespace

std::vector<RawIssueRecord> parse_export(std::istream& in) {
  std::vector<RawIssueRecord> records;
  std::string line;
  std::size_t index = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    ++index;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw IngestError(index, "", std::string("invalid JSON: ") + e.what());
    }
    records.push_back(decode_record(obj, index));
  }
  if (in.bad()) throw Error("I/O error while reading export stream");
  return records;
}

std::vector<RawIssueRecord> parse_export_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return parse_export(in);
}

void serialize_export(const std::vector<RawIssueRecord>& records, std::ostream& out) {
  for (const auto& r : records) {
    nlohmann::ordered_json o;
    o["issue_key"] = r.issue_key;
    o["issue_type"] = r.issue_type;
    o["project"] = r.project;
    o["subproject"] = r.subproject;
    o["priority_label"] = r.priority_label;
    o["reporter_id"] = r.reporter_id;
    o["assignee_id"] = r.assignee_id;
    o["created_at"] = r.created_at;
    o["resolution_status"] = r.resolution_status;
    o["last_update_at"] = r.last_update_at;
    auto& log = o["changelog"] = nlohmann::ordered_json::array();
    for (const auto& e : r.changelog) {
      nlohmann::ordered_json entry;
      entry["field_name"] = e.field_name;
      entry["from_value"] = e.from_value;
      entry["to_value"] = e.to_value;
      entry["at"] = e.at;
      entry["actor_id"] = e.actor_id;
      log.push_back(std::move(entry));
    }
    out << o.dump() << '\n';
  }
}

// ---------------------------------------------------------------------------
// normalization

Conversion to_bug_record(const RawIssueRecord& raw, const ProjectProfile& profile) {
  if (profile.allowed_issue_types.count(raw.issue_type) == 0) return Skipped{"non_bug"};

  const auto priority = profile.priority_of(raw.priority_label);
  if (!priority) {
    throw Error("issue " + raw.issue_key + ": unknown priority label '" + raw.priority_label + "'");
  }

  BugRecord bug;
  bug.id = raw.issue_key;
  bug.project = raw.project;
  bug.subproject = raw.subproject;
  bug.priority = *priority;
  bug.reporter_id = raw.reporter_id;
  bug.assignee_id = raw.assignee_id.empty() ? std::string(kUnassigned) : raw.assignee_id;
  bug.created_at = raw.created_at;
  bug.resolution_status = raw.resolution_status;
  bug.last_update_at = raw.last_update_at;

  bug.event_times.reserve(raw.changelog.size() + 1);
  bug.event_times.push_back(raw.created_at);
  for (const auto& e : raw.changelog) {
    bug.event_times.push_back(e.at);
    if (e.field_name != "status") continue;
    if (e.from_value.empty() || e.to_value.empty()) {
      throw Error("issue " + raw.issue_key + ": status change with empty state");
    }
    bug.transitions.push_back({e.from_value, e.to_value, e.at, e.actor_id});
  }
  std::sort(bug.event_times.begin(), bug.event_times.end());

  if (!bug.transitions.empty() && bug.transitions.front().from_state != profile.workflow.initial) {
    throw Error("issue " + raw.issue_key + ": history starts in '" + bug.transitions.front().from_state +
                "', expected '" + profile.workflow.initial + "'");
  }
  return bug;
}

RawIssueRecord to_raw_record(const BugRecord& bug, const ProjectProfile& profile) {
  RawIssueRecord raw;
  raw.issue_key = bug.id;
  raw.issue_type = profile.allowed_issue_types.count("Bug") ? "Bug" : *profile.allowed_issue_types.begin();
  raw.project = bug.project;
  raw.subproject = bug.subproject;
  raw.priority_label = profile.label_of(bug.priority);
  raw.reporter_id = bug.reporter_id;
  raw.assignee_id = bug.is_assigned() ? bug.assignee_id : std::string();
  raw.created_at = bug.created_at;
  raw.resolution_status = bug.resolution_status;
  raw.last_update_at = bug.last_update_at;

  // event times not explained by creation or a status change become plain edits
  std::vector<Timestamp> extra = bug.event_times;
  std::sort(extra.begin(), extra.end());
  auto take = [&extra](Timestamp t) {
    auto it = std::lower_bound(extra.begin(), extra.end(), t);
    if (it != extra.end() && *it == t) extra.erase(it);
  };
  take(bug.created_at);
  for (const auto& t : bug.transitions) take(t.at);

  std::size_t e = 0;
  for (const auto& t : bug.transitions) {
    while (e < extra.size() && extra[e] <= t.at) {
      raw.changelog.push_back({"edit", "", "", extra[e++], ""});
    }
    raw.changelog.push_back({"status", t.from_state, t.to_state, t.at, t.actor_id});
  }
  for (; e < extra.size(); ++e) raw.changelog.push_back({"edit", "", "", extra[e], ""});
  return raw;
}

IngestResult ingest(const std::vector<RawIssueRecord>& raw, const ProjectProfile& profile) {
  IngestResult result;
  result.bugs.reserve(raw.size());
  for (const auto& r : raw) {
    auto converted = to_bug_record(r, profile);
    if (auto* bug = std::get_if<BugRecord>(&converted)) {
      result.bugs.push_back(std::move(*bug));
    } else {
      result.skipped.emplace_back(r.issue_key, std::get<Skipped>(converted).reason);
    }
  }
  return result;
}

std::vector<StageInterval> extract_stage_intervals(const BugRecord& bug, const std::string& initial) {
  std::vector<StageInterval> out;
  out.reserve(bug.transitions.size() + 1);
  std::string state = bug.transitions.empty() ? initial : bug.transitions.front().from_state;
  Timestamp entered = bug.created_at;
  for (std::size_t k = 0; k < bug.transitions.size(); ++k) {
    const auto& t = bug.transitions[k];
    if (t.from_state != state) {
      throw Error("bug " + bug.id + ": discontinuous history at index " + std::to_string(k));
    }
    if (t.at < entered) {
      throw Error("bug " + bug.id + ": transition " + std::to_string(k) + " is out of order");
    }
    out.push_back({state, entered, t.at, seconds_to_hours(t.at - entered)});
    state = t.to_state;
    entered = t.at;
  }
  out.push_back({state, entered, std::nullopt, 0.0});
  return out;
}

// ---------------------------------------------------------------------------
// workflows and profiles

const std::vector<std::string>& builtin_workflow_names() {
  static const std::vector<std::string> names{"standard", "onap", "apache"};
  return names;
}

namespace {

WorkflowSpec standard_workflow() {
  WorkflowSpec w;
  w.name = "standard";
  w.states = {"Open", "In Progress", "Resolved", "Reopened", "Closed"};
  w.initial = "Open";
  w.terminal = "Closed";
  w.allowed_transitions = {
      {"Open", "In Progress"},     {"Open", "Resolved"},         {"Open", "Closed"},
      {"In Progress", "Open"},     {"In Progress", "Resolved"},  {"In Progress", "Closed"},
      {"Resolved", "Closed"},      {"Resolved", "Reopened"},     {"Closed", "Reopened"},
      {"Reopened", "In Progress"}, {"Reopened", "Resolved"},     {"Reopened", "Closed"},
  };
  return w;
}

WorkflowSpec apache_workflow() {
  WorkflowSpec w = standard_workflow();
  w.name = "apache";
  w.states.insert("Patch Available");
  for (const char* from : {"Open", "In Progress", "Reopened"}) {
    w.allowed_transitions.insert({from, "Patch Available"});
  }
  for (const char* to : {"Open", "In Progress", "Resolved", "Closed"}) {
    w.allowed_transitions.insert({"Patch Available", to});
  }
  return w;
}

WorkflowSpec onap_workflow() {
  WorkflowSpec w;
  w.name = "onap";
  w.states = {"Open", "In Progress", "Submitted", "Delivered", "Reopened", "Closed"};
  w.initial = "Open";
  w.terminal = "Closed";
  w.allowed_transitions = {
      // main line
      {"Open", "In Progress"},     {"In Progress", "Submitted"},  {"Submitted", "Delivered"},
      {"Delivered", "Closed"},     {"Delivered", "Reopened"},     {"Closed", "Reopened"},
      {"Reopened", "In Progress"}, {"In Progress", "Open"},       {"Submitted", "In Progress"},
      // observed shortcuts
      {"Open", "Closed"},          {"Open", "Delivered"},         {"Open", "Submitted"},
      {"In Progress", "Closed"},   {"In Progress", "Delivered"},  {"Submitted", "Closed"},
      {"Reopened", "Delivered"},   {"Reopened", "Closed"},
  };
  return w;
}

std::vector<std::pair<std::string, int>> default_priority_labels() {
  return {{"Highest", 1}, {"High", 2},  {"Medium", 3}, {"Low", 4},     {"Lowest", 5},
          {"Blocker", 1}, {"Critical", 2}, {"Major", 3}, {"Minor", 4}, {"Trivial", 5}};
}

WorkflowSpec workflow_from_json(const json& j) {
  if (j.is_string()) return builtin_workflow(j.get<std::string>());
  if (!j.is_object()) throw ProfileError("workflow must be a name or an object");
  WorkflowSpec w;
  w.name = j.value("name", "custom");
  for (const auto& s : j.at("states")) w.states.insert(s.get<std::string>());
  w.initial = j.value("initial", "Open");
  w.terminal = j.value("terminal", "Closed");
  if (j.contains("transitions")) {
    for (const auto& t : j.at("transitions")) {
      if (!t.is_array() || t.size() != 2) throw ProfileError("workflow transitions must be [from, to] pairs");
      w.allowed_transitions.insert({t[0].get<std::string>(), t[1].get<std::string>()});
    }
  }
  validate(w);
  return w;
}

}  // namespace

void validate(const WorkflowSpec& spec) {
  if (!spec.has_state(spec.initial)) throw ProfileError("workflow " + spec.name + ": initial state not in states");
  if (!spec.has_state(spec.terminal)) throw ProfileError("workflow " + spec.name + ": terminal state not in states");
  for (const auto& [from, to] : spec.allowed_transitions) {
    if (!spec.has_state(from) || !spec.has_state(to)) {
      throw ProfileError("workflow " + spec.name + ": transition " + from + " -> " + to + " uses an unknown state");
    }
  }
}

WorkflowSpec builtin_workflow(const std::string& name) {
  if (name == "standard") return standard_workflow();
  if (name == "onap") return onap_workflow();
  if (name == "apache") return apache_workflow();
  std::string valid;
  for (const auto& n : builtin_workflow_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw ProfileError("unknown workflow '" + name + "' (valid: " + valid + ")");
}

ProjectProfile default_profile(const std::string& workflow_name) {
  ProjectProfile p;
  p.workflow = builtin_workflow(workflow_name);
  p.priority_map = default_priority_labels();
  return p;
}

ProjectProfile parse_profile(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ProfileError(std::string("profile is not valid JSON: ") + e.what());
  }
  try {
    ProjectProfile p;
    p.workflow = workflow_from_json(j.value("workflow", json("standard")));
    if (j.contains("priorities")) {
      const json& pr = j.at("priorities");
      if (pr.is_object()) {
        for (const auto& [label, level] : pr.items()) p.priority_map.emplace_back(label, level.get<int>());
      } else {
        for (const auto& entry : pr) p.priority_map.emplace_back(entry.at(0).get<std::string>(), entry.at(1).get<int>());
      }
    } else {
      p.priority_map = default_priority_labels();
    }
    for (const auto& [label, level] : p.priority_map) {
      if (level < 1 || level > 5) throw ProfileError("priority '" + label + "' maps outside 1..5");
    }
    if (j.contains("issue_types")) {
      p.allowed_issue_types.clear();
      for (const auto& t : j.at("issue_types")) p.allowed_issue_types.insert(t.get<std::string>());
    }
    return p;
  } catch (const json::exception& e) {
    throw ProfileError(std::string("malformed profile: ") + e.what());
  }
}

ProjectProfile load_profile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ProfileError("cannot open profile " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_profile(ss.str());
}

}  // namespace bugflow
