#include <gtest/gtest.h>

#include <sstream>

#include "bugflow/ingest.hpp"
#include "support.hpp"

using namespace bugflow;
using bugflow::testing::Gen;

namespace {

const char* kRecordA =
    R"({"issue_key":"ONAP-1","issue_type":"Bug","project":"ONAP","subproject":"so","priority_label":"Highest",)"
    R"("reporter_id":"alice","assignee_id":"bob","created_at":"2023-04-05T10:00:00Z","resolution_status":"Done",)"
    R"("last_update_at":1680710400,"changelog":[{"field_name":"status","from_value":"Open","to_value":"Closed",)"
    R"("at":1680706800,"actor_id":"bob"}]})";

const char* kRecordB =
    R"({"issue_key":"ONAP-2","issue_type":"Task","project":"ONAP","subproject":"so","priority_label":"Low",)"
    R"("reporter_id":"carol","assignee_id":"","created_at":0,"resolution_status":"Done","last_update_at":5,)"
    R"("changelog":[]})";

RawIssueRecord raw_bug(const std::string& label, const std::string& assignee = "bob") {
  RawIssueRecord r;
  r.issue_key = "K-1";
  r.issue_type = "Bug";
  r.project = "K";
  r.priority_label = label;
  r.reporter_id = "alice";
  r.assignee_id = assignee;
  r.created_at = 0;
  r.resolution_status = "Fixed";
  r.last_update_at = 100;
  r.changelog = {{"comment", "", "", 10, "alice"}, {"status", "Open", "Closed", 50, "bob"}};
  return r;
}

}  // namespace

TEST(ParseExport, KeepsRecordOrder) {
  std::istringstream in(std::string(kRecordA) + "\n\n" + kRecordB + "\n");
  const auto records = parse_export(in);
  ASSERT_EQ(records.size(), 2u);
  EXPECT_EQ(records[0].issue_key, "ONAP-1");
  EXPECT_EQ(records[1].issue_key, "ONAP-2");
  EXPECT_EQ(records[0].created_at, 1680688800);
  EXPECT_EQ(records[0].changelog.at(0).to_value, "Closed");
}

TEST(ParseExport, EmptyStream) {
  std::istringstream in("");
  EXPECT_TRUE(parse_export(in).empty());
}

TEST(ParseExport, MissingFieldNamesRecordAndField) {
  std::string third = kRecordB;
  third.replace(third.find("\"created_at\":0,"), std::string("\"created_at\":0,").size(), "");
  std::istringstream in(std::string(kRecordA) + "\n" + kRecordB + "\n" + third + "\n");
  try {
    parse_export(in);
    FAIL() << "expected an IngestError";
  } catch (const IngestError& e) {
    EXPECT_EQ(e.record_index(), 3u);
    EXPECT_EQ(e.field(), "created_at");
    EXPECT_STREQ(e.what(), "record 3: missing created_at");
  }
}

TEST(ParseExport, RejectsChangelogBeforeCreation) {
  std::string bad = kRecordA;
  bad.replace(bad.find("1680706800"), 10, "1000");
  std::istringstream in(bad);
  EXPECT_THROW(parse_export(in), IngestError);
}

TEST(Timestamps, Iso8601Forms) {
  EXPECT_EQ(parse_timestamp("2023-04-05T10:00:00Z"), 1680688800);
  EXPECT_EQ(parse_timestamp("2023-04-05T12:00:00+02:00"), 1680688800);
  EXPECT_EQ(parse_timestamp("2023-04-05T10:00:00.250Z"), 1680688800);
  EXPECT_EQ(parse_timestamp("2023-04-05"), 1680652800);
  EXPECT_EQ(parse_timestamp("1680688800"), 1680688800);
  EXPECT_THROW(parse_timestamp("yesterday"), std::invalid_argument);
  EXPECT_EQ(parse_timestamp(format_timestamp_iso(1680688800)), 1680688800);
}

TEST(ToBugRecord, SkipsNonBugs) {
  auto r = raw_bug("Highest");
  r.issue_type = "Task";
  const auto c = to_bug_record(r, default_profile("onap"));
  ASSERT_TRUE(std::holds_alternative<Skipped>(c));
  EXPECT_EQ(std::get<Skipped>(c).reason, "non_bug");
}

TEST(ToBugRecord, MapsPriorityLabel) {
  const auto c = to_bug_record(raw_bug("Blocker"), default_profile("apache"));
  EXPECT_EQ(std::get<BugRecord>(c).priority, 1);
}

TEST(ToBugRecord, UnknownLabelNamesIt) {
  try {
    to_bug_record(raw_bug("Urgent!"), default_profile("onap"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("Urgent!"), std::string::npos);
  }
}

TEST(ToBugRecord, EmptyAssigneeIsUnassigned) {
  const auto b = std::get<BugRecord>(to_bug_record(raw_bug("High", ""), default_profile("onap")));
  EXPECT_EQ(b.assignee_id, kUnassigned);
  EXPECT_FALSE(b.is_assigned());
}

TEST(ToBugRecord, OnlyStatusEntriesBecomeTransitions) {
  const auto b = std::get<BugRecord>(to_bug_record(raw_bug("High"), default_profile("onap")));
  ASSERT_EQ(b.transitions.size(), 1u);
  EXPECT_EQ(b.transitions[0], (StateTransition{"Open", "Closed", 50, "bob"}));
  EXPECT_EQ(b.event_times, (std::vector<Timestamp>{0, 10, 50}));
}

TEST(ToBugRecord, PriorityAlwaysInRange) {
  const auto profile = default_profile("apache");
  Gen g(11);
  for (int i = 0; i < 200; ++i) {
    const auto& [label, level] = g.pick(profile.priority_map);
    const auto b = std::get<BugRecord>(to_bug_record(raw_bug(label), profile));
    EXPECT_EQ(b.priority, level);
    EXPECT_GE(b.priority, 1);
    EXPECT_LE(b.priority, 5);
  }
}

TEST(StageIntervals, DirectConstruction) {
  const auto b = bugflow::testing::walk("B", {"Open", "In Progress", "Closed"}, {10, 15});
  const auto iv = extract_stage_intervals(b);
  ASSERT_EQ(iv.size(), 3u);
  EXPECT_EQ(iv[0].state, "Open");
  EXPECT_DOUBLE_EQ(iv[0].duration_hours, 10.0);
  EXPECT_EQ(iv[1].state, "In Progress");
  EXPECT_EQ(iv[1].entered_at, 36000);
  EXPECT_EQ(*iv[1].exited_at, 90000);
  EXPECT_EQ(iv[2].state, "Closed");
  EXPECT_FALSE(iv[2].bounded());
}

TEST(StageIntervals, NoTransitions) {
  const auto b = bugflow::testing::walk("B", {"Open"}, {}, 42);
  const auto iv = extract_stage_intervals(b);
  ASSERT_EQ(iv.size(), 1u);
  EXPECT_EQ(iv[0].state, "Open");
  EXPECT_EQ(iv[0].entered_at, 42);
  EXPECT_FALSE(iv[0].bounded());
}

TEST(StageIntervals, DiscontinuousHistory) {
  auto b = bugflow::testing::walk("B", {"Open", "In Progress", "Closed"}, {1, 1});
  b.transitions[1].from_state = "Submitted";
  try {
    extract_stage_intervals(b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("discontinuous history at index 1"), std::string::npos);
  }
}

TEST(StageIntervals, TelescopingProperty) {
  Gen g(3);
  const std::vector<std::string> states{"Open", "In Progress", "Submitted", "Delivered", "Reopened", "Closed"};
  for (int i = 0; i < 300; ++i) {
    const auto b = bugflow::testing::random_bug(g, "B" + std::to_string(i), states);
    const auto iv = extract_stage_intervals(b);
    double sum = 0.0;
    for (std::size_t k = 0; k < iv.size(); ++k) {
      if (iv[k].bounded()) sum += iv[k].duration_hours;
      if (k > 0) EXPECT_EQ(iv[k].entered_at, *iv[k - 1].exited_at);
    }
    const double expected = seconds_to_hours(b.transitions.back().at - b.created_at);
    EXPECT_NEAR(sum, expected, 1e-9 * std::max(1.0, expected));
  }
}

TEST(Workflows, Builtins) {
  const auto onap = builtin_workflow("onap");
  EXPECT_TRUE(onap.has_state("Submitted"));
  EXPECT_TRUE(onap.has_state("Delivered"));
  const std::vector<TransitionKey> observed{
      {"Open", "Closed"},        {"Open", "In Progress"},     {"Open", "Delivered"},     {"Delivered", "Closed"},
      {"Delivered", "Reopened"}, {"Reopened", "Delivered"},   {"Reopened", "In Progress"}, {"Reopened", "Closed"},
      {"In Progress", "Submitted"}, {"In Progress", "Open"},  {"In Progress", "Closed"}, {"In Progress", "Delivered"},
      {"Submitted", "Delivered"}, {"Submitted", "In Progress"}};
  for (const auto& [from, to] : observed) EXPECT_TRUE(onap.allows(from, to)) << from << " -> " << to;

  const auto standard = builtin_workflow("standard");
  EXPECT_EQ(standard.initial, "Open");
  EXPECT_EQ(standard.terminal, "Closed");
  EXPECT_EQ(standard.states.size(), 5u);

  const auto apache = builtin_workflow("apache");
  EXPECT_TRUE(apache.has_state("Patch Available"));
  EXPECT_FALSE(apache.has_state("Delivered"));
}

TEST(Workflows, UnknownNameListsValidOnes) {
  try {
    builtin_workflow("bugzilla");
    FAIL();
  } catch (const ProfileError& e) {
    const std::string msg = e.what();
    for (const auto& n : builtin_workflow_names()) EXPECT_NE(msg.find(n), std::string::npos);
  }
}

TEST(Profiles, ParsesObjectForm) {
  const auto p = parse_profile(R"({"workflow":"standard","priorities":{"P0":1,"P1":2},"issue_types":["Bug","Defect"]})");
  EXPECT_EQ(p.priority_of("P1"), 2);
  EXPECT_FALSE(p.priority_of("P9").has_value());
  EXPECT_TRUE(p.allowed_issue_types.count("Defect"));
  EXPECT_THROW(parse_profile(R"({"workflow":"standard","priorities":{"P0":7}})"), ProfileError);
}

TEST(Profiles, InlineWorkflow) {
  const auto p = parse_profile(
      R"({"workflow":{"name":"tiny","states":["New","Done"],"initial":"New","terminal":"Done",)"
      R"("transitions":[["New","Done"]]},"priorities":[["P1",1]]})");
  EXPECT_EQ(p.workflow.name, "tiny");
  EXPECT_TRUE(p.workflow.allows("New", "Done"));
}

TEST(RoundTrip, SerializeThenParseIsIdentity) {
  Gen g(5);
  const auto profile = default_profile("onap");
  const std::vector<std::string> states{"Open", "In Progress", "Submitted", "Delivered", "Reopened", "Closed"};
  for (int round = 0; round < 20; ++round) {
    Corpus corpus;
    for (int i = 0; i < 25; ++i) {
      auto b = bugflow::testing::random_bug(g, "ONAP-" + std::to_string(i), states);
      b.project = "ONAP";
      const auto extra = g.integer(0, 3);
      for (std::int64_t e = 0; e < extra; ++e) b.event_times.push_back(g.integer(b.created_at, b.last_update_at));
      std::sort(b.event_times.begin(), b.event_times.end());
      corpus.push_back(b);
    }
    std::vector<RawIssueRecord> raw;
    for (const auto& b : corpus) raw.push_back(to_raw_record(b, profile));
    std::ostringstream out;
    serialize_export(raw, out);
    std::istringstream in(out.str());
    const auto parsed = parse_export(in);
    EXPECT_EQ(parsed, raw);
    const auto back = ingest(parsed, profile);
    EXPECT_TRUE(back.skipped.empty());
    EXPECT_EQ(back.bugs, corpus);
  }
}
