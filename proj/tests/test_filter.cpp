#include <gtest/gtest.h>

#include <algorithm>

#include "bugflow/filter.hpp"
#include "bugflow/ingest.hpp"
#include "bugflow/stats.hpp"
#include "support.hpp"

using namespace bugflow;
using bugflow::testing::Gen;
using bugflow::testing::walk;
using bugflow::testing::walk_seconds;

namespace {

struct Span {
  std::string state;
  Timestamp from;
  Timestamp to;  // -1 when open-ended
  bool operator==(const Span&) const = default;
};

std::vector<Span> spans(const BugRecord& b) {
  std::vector<Span> out;
  for (const auto& iv : extract_stage_intervals(b)) out.push_back({iv.state, iv.entered_at, iv.exited_at.value_or(-1)});
  return out;
}

std::vector<std::string> states_of(const BugRecord& b) {
  std::vector<std::string> s;
  for (const auto& sp : spans(b)) s.push_back(sp.state);
  return s;
}

// Removes one span at a time, letting the previous span take its time.
std::vector<Span> fold_once(std::vector<Span> v, const std::function<bool(const std::vector<Span>&, std::size_t)>& drop) {
  for (std::size_t k = 1; k < v.size(); ++k) {
    if (drop(v, k)) {
      v[k - 1].to = v[k].to;
      v.erase(v.begin() + static_cast<std::ptrdiff_t>(k));
      return v;
    }
  }
  return v;
}

std::vector<Span> fold_fixed_point(std::vector<Span> v,
                                   const std::function<bool(const std::vector<Span>&, std::size_t)>& drop) {
  for (;;) {
    auto next = fold_once(v, drop);
    if (next == v) return v;
    v = std::move(next);
  }
}

double span_total(const BugRecord& b) { return seconds_to_hours(b.transitions.back().at - b.created_at); }

Corpus with_times(const std::vector<double>& hours) {
  Corpus c;
  for (std::size_t i = 0; i < hours.size(); ++i) c.push_back(walk("T" + std::to_string(i), {"Open", "Closed"}, {hours[i]}));
  return c;
}

BugRecord with_events(std::vector<int> days) {
  BugRecord b = walk("I", {"Open"}, {});
  b.event_times.clear();
  for (int d : days) b.event_times.push_back(static_cast<Timestamp>(d) * 86400);
  b.transitions.push_back({"Open", "Closed", b.event_times.back(), "x"});
  b.last_update_at = b.event_times.back();
  return b;
}

const std::vector<std::string> kOnapStates{"Open", "In Progress", "Submitted", "Delivered", "Reopened", "Closed"};

}  // namespace

TEST(StatusFilter, KeepsAllowedStatuses) {
  Corpus c;
  for (int i = 0; i < 8; ++i) c.push_back(walk("D" + std::to_string(i), {"Open", "Closed"}, {1}, 0, "Done"));
  c.push_back(walk("X", {"Open", "Closed"}, {1}, 0, "Duplicate"));
  c.push_back(walk("U", {"Open"}, {}, 0, "Unresolved"));
  const auto f = filter_resolution_status(c, FilterConfig{}.allowed_statuses);
  EXPECT_EQ(f.corpus.size(), 8u);
  EXPECT_EQ(f.report.removed_by_rule.at("resolution_status"), 2u);
  EXPECT_TRUE(f.report.reconciles());
}

TEST(StatusFilter, DefaultsAndEmpty) {
  EXPECT_EQ(FilterConfig{}.allowed_statuses, (std::set<std::string>{"Done", "Fixed"}));
  EXPECT_EQ(FilterConfig{}.transient_threshold_seconds, 300);
  EXPECT_EQ(FilterConfig{}.inactivity_gap_days, 30);
  const auto f = filter_resolution_status({}, {"Done"});
  EXPECT_TRUE(f.corpus.empty());
  EXPECT_EQ(f.report.input_count, 0u);
  EXPECT_EQ(f.report.removed_total(), 0u);
}

TEST(Truncate, CutsAfterFirstTerminalEntry) {
  const auto b = walk("B", {"Open", "Closed", "Reopened", "Closed"}, {5, 895, 10});
  std::size_t n = 0;
  const auto t = truncate_after_closed(b, "Closed", &n);
  ASSERT_EQ(t.transitions.size(), 1u);
  EXPECT_EQ(t.transitions[0].at, 5 * 3600);
  EXPECT_EQ(n, 1u);
}

TEST(Truncate, NoOpCases) {
  const auto open = walk("B", {"Open", "In Progress"}, {5});
  EXPECT_EQ(truncate_after_closed(open, "Closed"), open);
  const auto single = walk("C", {"Open", "Closed"}, {5});
  EXPECT_EQ(truncate_after_closed(single, "Closed"), single);
}

TEST(DropUndefined, PreviousStateAbsorbsTime) {
  const auto spec = builtin_workflow("onap");
  const auto b = walk("B", {"Open", "Weird", "Closed"}, {10, 2});
  std::size_t n = 0;
  const auto d = drop_undefined_states(b, spec, &n);
  EXPECT_EQ(spans(d), (std::vector<Span>{{"Open", 0, 12 * 3600}, {"Closed", 12 * 3600, -1}}));
  EXPECT_EQ(n, 1u);
  EXPECT_EQ(drop_undefined_states(d, spec), d);
}

TEST(DropUndefined, ConsecutiveUndefinedMatchRepeatedRemoval) {
  const auto spec = builtin_workflow("onap");
  const auto b = walk("B", {"Open", "In Progress", "Weird", "Odd", "Closed"}, {3, 4, 5, 6});
  auto undefined = [&spec](const std::vector<Span>& v, std::size_t k) { return !spec.has_state(v[k].state); };
  EXPECT_EQ(spans(drop_undefined_states(b, spec)), fold_fixed_point(spans(b), undefined));
}

TEST(DropUndefined, FirstIntervalUndefinedIsError) {
  auto b = walk("B", {"Limbo", "Closed"}, {3});
  EXPECT_THROW(drop_undefined_states(b, builtin_workflow("onap")), FilterError);
}

TEST(MergeTransient, AbsorbedByPredecessor) {
  const auto b = walk_seconds("B", {"Open", "In Progress", "Closed"}, {36000, 60});
  std::size_t n = 0;
  const auto m = merge_transient_states(b, 300, &n);
  EXPECT_EQ(spans(m), (std::vector<Span>{{"Open", 0, 36060}, {"Closed", 36060, -1}}));
  EXPECT_EQ(n, 1u);
}

TEST(MergeTransient, FirstAndLastExempt) {
  const auto b = walk_seconds("B", {"Open", "In Progress", "Closed"}, {10, 4000});
  EXPECT_EQ(merge_transient_states(b, 300), b);
}

TEST(MergeLoops, CoalescesRuns) {
  const auto b = walk("B", {"Open", "Open", "Closed"}, {5, 3});
  EXPECT_EQ(spans(merge_loops(b)), (std::vector<Span>{{"Open", 0, 8 * 3600}, {"Closed", 8 * 3600, -1}}));
  const auto a = walk("A", {"A", "A", "A", "B"}, {1, 1, 1});
  std::size_t n = 0;
  const auto m = merge_loops(a, &n);
  EXPECT_EQ(states_of(m), (std::vector<std::string>{"A", "B"}));
  EXPECT_EQ(n, 2u);
  auto same = [](const std::vector<Span>& v, std::size_t k) { return v[k].state == v[k - 1].state; };
  EXPECT_EQ(spans(m), fold_fixed_point(spans(a), same));
  const auto clean = walk("C", {"Open", "In Progress", "Closed"}, {1, 1});
  EXPECT_EQ(merge_loops(clean), clean);
}

TEST(Pipeline, FixtureFiresEachRuleOnce) {
  const auto spec = builtin_workflow("onap");
  Corpus c;
  c.push_back(walk("dup", {"Open", "Closed"}, {1}, 0, "Duplicate"));
  c.push_back(walk("tail", {"Open", "Closed", "Reopened", "Closed"}, {5, 900, 10}));
  c.push_back(walk("undef", {"Open", "Weird", "Closed"}, {10, 2}));
  c.push_back(walk_seconds("blip", {"Open", "In Progress", "Closed"}, {36000, 60}));
  c.push_back(walk("loop", {"Open", "Open", "Closed"}, {5, 3}));
  const auto f = apply_standard_pipeline(c, FilterConfig{}, spec);
  EXPECT_EQ(f.report.input_count, 5u);
  EXPECT_EQ(f.report.kept_count, 4u);
  EXPECT_EQ(f.report.removed_by_rule.at("resolution_status"), 1u);
  EXPECT_EQ(f.report.truncated_tails, 1u);
  EXPECT_EQ(f.report.dropped_undefined_states, 1u);
  EXPECT_EQ(f.report.merged_transient_states, 1u);
  EXPECT_EQ(f.report.merged_loops, 1u);
  EXPECT_TRUE(f.report.reconciles());
  for (const auto& b : f.corpus) EXPECT_EQ(states_of(b), (std::vector<std::string>{"Open", "Closed"})) << b.id;
}

TEST(Pipeline, CleanCorpusUnchanged) {
  const auto spec = builtin_workflow("onap");
  Corpus c{walk("a", {"Open", "In Progress", "Closed"}, {2, 3}), walk("b", {"Open", "Closed"}, {4})};
  const auto f = apply_standard_pipeline(c, FilterConfig{}, spec);
  EXPECT_EQ(f.corpus, c);
  EXPECT_EQ(f.report.kept_count, 2u);
  EXPECT_EQ(f.report.removed_total() + f.report.merged_loops + f.report.merged_transient_states +
                f.report.dropped_undefined_states + f.report.truncated_tails,
            0u);
}

TEST(Pipeline, PropertiesOnRandomCorpora) {
  const auto spec = builtin_workflow("onap");
  FilterConfig cfg;
  std::vector<std::string> states = kOnapStates;
  states.push_back("Weird");
  states.push_back("Needs Info");
  Gen g(21);
  for (int round = 0; round < 30; ++round) {
    Corpus c;
    for (int i = 0; i < 40; ++i) {
      // short sojourns make transient merges likely; repeated states make loops
      auto b = bugflow::testing::random_bug(g, "B" + std::to_string(i), states, 1, g.coin() ? 900 : 90000);
      if (g.coin(0.3)) {
        const Timestamp t = b.transitions.back().at;
        b.transitions.push_back({"Closed", "Reopened", t + 100000, "x"});
        b.transitions.push_back({"Reopened", "Closed", t + 200000, "x"});
        b.last_update_at = t + 200000;
      }
      if (g.coin(0.1)) b.resolution_status = "Won't Fix";
      c.push_back(std::move(b));
    }
    const auto once = apply_standard_pipeline(c, cfg, spec);
    const auto twice = apply_standard_pipeline(once.corpus, cfg, spec);
    EXPECT_EQ(twice.corpus, once.corpus);
    EXPECT_TRUE(once.report.reconciles());
    for (const auto& b : once.corpus) {
      const auto original = std::find_if(c.begin(), c.end(), [&b](const BugRecord& o) { return o.id == b.id; });
      EXPECT_DOUBLE_EQ(resolution_time(b), resolution_time(*original));
      const auto iv = extract_stage_intervals(b);
      for (std::size_t k = 0; k < iv.size(); ++k) {
        EXPECT_TRUE(spec.has_state(iv[k].state));
        if (k > 0) EXPECT_NE(iv[k].state, iv[k - 1].state);
        if (k > 0 && iv[k].bounded()) {
          EXPECT_GE(*iv[k].exited_at - iv[k].entered_at, cfg.transient_threshold_seconds);
        }
      }
      EXPECT_EQ(b.transitions.back().to_state, spec.terminal);
    }
  }
}

TEST(Tukey, MildRemovesLargeOutlier) {
  std::vector<double> h;
  for (int i = 1; i <= 20; ++i) h.push_back(i);
  h.push_back(1000);
  // n = 21: Q1 at rank 5 -> 6, Q3 at rank 15 -> 16
  const auto fences = tukey_fences(h, OutlierMode::mild);
  EXPECT_DOUBLE_EQ(fences.q1, 6.0);
  EXPECT_DOUBLE_EQ(fences.q3, 16.0);
  EXPECT_DOUBLE_EQ(fences.upper, 31.0);
  EXPECT_DOUBLE_EQ(fences.lower, -9.0);
  const auto f = tukey_outlier_filter(with_times(h), OutlierMode::mild);
  EXPECT_EQ(f.corpus.size(), 20u);
  EXPECT_EQ(f.report.removed_by_rule.at("outlier_mild"), 1u);
  for (const auto& b : f.corpus) EXPECT_LT(resolution_time(b), 1000.0);
}

TEST(Tukey, UniformTimesKeepEverything) {
  const auto f = tukey_outlier_filter(with_times(std::vector<double>(10, 7.0)), OutlierMode::mild);
  EXPECT_EQ(f.corpus.size(), 10u);
}

TEST(Tukey, ExtremeKeepsSupersetOfMild) {
  Gen g(8);
  for (int round = 0; round < 50; ++round) {
    std::vector<double> h;
    const auto n = g.integer(4, 60);
    for (std::int64_t i = 0; i < n; ++i) h.push_back(std::exp(g.real(0.0, 8.0)));
    const auto c = with_times(h);
    const auto mild = tukey_outlier_filter(c, OutlierMode::mild);
    const auto extreme = tukey_outlier_filter(c, OutlierMode::extreme);
    for (const auto& b : mild.corpus) {
      EXPECT_TRUE(std::any_of(extreme.corpus.begin(), extreme.corpus.end(),
                              [&b](const BugRecord& e) { return e.id == b.id; }));
    }
    EXPECT_TRUE(mild.report.reconciles());
    EXPECT_TRUE(extreme.report.reconciles());
  }
}

TEST(Tukey, TooFewBugs) { EXPECT_THROW(tukey_outlier_filter(with_times({1, 2, 3}), OutlierMode::mild), FilterError); }

TEST(Inactivity, AnyLongGapRemoves) {
  const auto f = inactivity_filter({with_events({0, 2, 40}), with_events({0, 10, 20, 29})}, 30);
  ASSERT_EQ(f.corpus.size(), 1u);
  EXPECT_EQ(f.corpus[0].event_times.back(), 29 * 86400);
  EXPECT_EQ(f.report.removed_by_rule.at("inactivity"), 1u);
}

TEST(Inactivity, EditsAfterTerminalIgnored) {
  auto b = with_events({0, 10, 20});
  b.event_times.push_back(200 * 86400);
  b.last_update_at = 200 * 86400;
  EXPECT_EQ(inactivity_filter({b}, 30).corpus.size(), 1u);
}

TEST(FilterConfigFile, ParsesKeys) {
  const auto c = parse_filter_config(
      R"({"allowed_statuses":["Done"],"transient_threshold_seconds":120,"outlier_mode":"extreme","inactivity_gap_days":14,"inactivity_filter":true})");
  EXPECT_EQ(c.allowed_statuses, (std::set<std::string>{"Done"}));
  EXPECT_EQ(c.transient_threshold_seconds, 120);
  EXPECT_EQ(c.outlier_mode, OutlierMode::extreme);
  EXPECT_EQ(c.inactivity_gap_days, 14);
  EXPECT_TRUE(c.inactivity_enabled);
  EXPECT_THROW(parse_filter_config(R"({"transient_threshold_seconds":0})"), FilterError);
  EXPECT_THROW(parse_filter_config(R"({"outlier_mode":"wild"})"), FilterError);
}

TEST(ConfiguredFilters, ChainsReports) {
  FilterConfig cfg;
  cfg.outlier_mode = OutlierMode::mild;
  std::vector<double> h;
  for (int i = 1; i <= 20; ++i) h.push_back(i);
  h.push_back(1000);
  auto c = with_times(h);
  c.push_back(walk("dup", {"Open", "Closed"}, {1}, 0, "Duplicate"));
  const auto f = apply_configured_filters(c, cfg, builtin_workflow("onap"));
  EXPECT_EQ(f.report.input_count, 22u);
  EXPECT_EQ(f.report.kept_count, 20u);
  EXPECT_TRUE(f.report.reconciles());
}
