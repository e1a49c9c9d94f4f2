#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "bugflow/filter.hpp"
#include "bugflow/ingest.hpp"
#include "bugflow/stats.hpp"
#include "bugflow/synth.hpp"
#include "support.hpp"

using namespace bugflow;

namespace {

GeneratorSpec exponential_spec(std::size_t n, std::uint64_t seed) {
  GeneratorSpec spec;
  spec.workflow = builtin_workflow("onap");
  spec.routing = {{"Open", {{"In Progress", 0.6}, {"Closed", 0.15}, {"Delivered", 0.25}}},
                  {"In Progress", {{"Submitted", 0.5}, {"Closed", 0.3}, {"Open", 0.2}}},
                  {"Submitted", {{"Delivered", 0.9}, {"In Progress", 0.1}}},
                  {"Delivered", {{"Closed", 0.85}, {"Reopened", 0.15}}},
                  {"Reopened", {{"In Progress", 0.5}, {"Closed", 0.5}}}};
  const double rates[] = {0.02, 0.05, 0.1, 0.01, 0.04};
  std::size_t i = 0;
  for (const auto& [from, row] : spec.routing) {
    for (const auto& [to, p] : row) spec.sojourn[{from, to}] = {Sojourn::Kind::exponential, rates[i++ % 5]};
  }
  spec.reporters = {{"r1", 1.0}};
  spec.assignees = {{"a1", 1.0}};
  spec.n_bugs = n;
  spec.seed = seed;
  return spec;
}

std::string serialized(const Corpus& corpus) {
  const auto profile = default_profile("onap");
  std::vector<RawIssueRecord> raw;
  for (const auto& b : corpus) raw.push_back(to_raw_record(b, profile));
  std::ostringstream out;
  serialize_export(raw, out);
  return out.str();
}

std::vector<std::string> extract_path(const BugRecord& b) {
  std::vector<std::string> p{b.transitions.empty() ? std::string("Open") : b.transitions.front().from_state};
  for (const auto& t : b.transitions) p.push_back(t.to_state);
  return p;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(Generate, DeterministicRouting) {
  GeneratorSpec spec;
  spec.workflow = builtin_workflow("standard");
  spec.routing = {{"Open", {{"In Progress", 1.0}}}, {"In Progress", {{"Closed", 1.0}}}};
  spec.sojourn[{"Open", "In Progress"}] = {Sojourn::Kind::exponential, 0.5};
  spec.sojourn[{"In Progress", "Closed"}] = {Sojourn::Kind::lognormal, 0.0, 1.0, 0.5};
  spec.reporters = {{"r", 1.0}};
  spec.assignees = {{"a", 1.0}};
  spec.n_bugs = 300;
  const auto g = generate_corpus(spec);
  ASSERT_EQ(g.corpus.size(), 300u);
  for (std::size_t i = 0; i < g.corpus.size(); ++i) {
    EXPECT_EQ(join_path(extract_path(g.corpus[i])), "Open-In Progress-Closed");
    EXPECT_EQ(g.truth[i].bug_id, g.corpus[i].id);
    EXPECT_EQ(join_path(g.truth[i].path), "Open-In Progress-Closed");
  }
}

TEST(Generate, ExponentialMeansAndRoutingRecovered) {
  GeneratorSpec spec;
  spec.workflow = builtin_workflow("standard");
  spec.routing = {{"Open", {{"In Progress", 0.7}, {"Closed", 0.3}}},
                  {"In Progress", {{"Closed", 0.6}, {"Resolved", 0.4}}},
                  {"Resolved", {{"Closed", 1.0}}}};
  spec.sojourn[{"Open", "In Progress"}] = {Sojourn::Kind::exponential, 0.05};
  spec.sojourn[{"Open", "Closed"}] = {Sojourn::Kind::exponential, 0.01};
  spec.sojourn[{"In Progress", "Closed"}] = {Sojourn::Kind::exponential, 0.02};
  spec.sojourn[{"In Progress", "Resolved"}] = {Sojourn::Kind::exponential, 0.1};
  spec.sojourn[{"Resolved", "Closed"}] = {Sojourn::Kind::exponential, 0.2};
  spec.reporters = {{"r1", 1.0}};
  spec.assignees = {{"a1", 1.0}};
  spec.n_bugs = 10000;
  spec.seed = 21;
  const auto g = generate_corpus(spec);
  const auto stats = transition_duration_stats(g.corpus);
  std::map<std::string, double> leaving;
  for (const auto& [k, s] : stats) leaving[k.first] += static_cast<double>(s.count);
  for (const auto& [from, row] : spec.routing) {
    for (const auto& [to, p] : row) {
      const auto& s = stats.at({from, to});
      EXPECT_NEAR(static_cast<double>(s.count) / leaving.at(from), p, 0.02) << from << "->" << to;
      const double mean = spec.sojourn.at({from, to}).mean_hours();
      EXPECT_NEAR(s.mean_hours / mean, 1.0, 0.05) << from << "->" << to;
    }
  }
}

TEST(Generate, TruthMatchesCorpus) {
  auto spec = exponential_spec(500, 4);
  spec.reporters = {{"r1", 0.5}, {"r2", 2.0}};
  spec.assignees = {{"a1", 1.5}, {"a2", 3.0}};
  spec.self_assign_prob = 0.2;
  spec.self_assign_multiplier = 0.25;
  spec.comment_interval_hours = 10;
  const auto g = generate_corpus(spec);
  for (std::size_t i = 0; i < g.corpus.size(); ++i) {
    const auto& b = g.corpus[i];
    const auto& t = g.truth[i];
    EXPECT_EQ(extract_path(b), t.path);
    EXPECT_NEAR(resolution_time(b), t.resolution_hours, 1e-9);
    double sum = 0.0;
    for (double h : t.sojourn_hours) sum += h;
    EXPECT_NEAR(sum, t.resolution_hours, 1e-9);
    EXPECT_GE(b.priority, 1);
    EXPECT_LE(b.priority, 5);
    EXPECT_TRUE(std::is_sorted(b.event_times.begin(), b.event_times.end()));
    if (b.reporter_id == b.assignee_id) {
      const double rep = b.reporter_id == "r1" ? 0.5 : 2.0;
      EXPECT_DOUBLE_EQ(t.speed_multiplier, rep * 0.25);
    }
    for (std::size_t k = 1; k < b.transitions.size(); ++k) EXPECT_EQ(b.transitions[k].from_state, b.transitions[k - 1].to_state);
  }
}

TEST(Generate, ByteIdenticalForSameSeed) {
  const auto a = generate_corpus(exponential_spec(400, 9));
  const auto b = generate_corpus(exponential_spec(400, 9));
  EXPECT_EQ(serialized(a.corpus), serialized(b.corpus));
  std::ostringstream ta, tb;
  write_truth_csv(a.truth, ta);
  write_truth_csv(b.truth, tb);
  EXPECT_EQ(ta.str(), tb.str());
  EXPECT_NE(serialized(a.corpus), serialized(generate_corpus(exponential_spec(400, 10)).corpus));
}

TEST(Generate, PassesThroughIngest) {
  auto spec = exponential_spec(300, 2);
  spec.comment_interval_hours = 24;
  const auto g = generate_corpus(spec);
  std::istringstream in(serialized(g.corpus));
  const auto back = ingest(parse_export(in), default_profile("onap"));
  EXPECT_TRUE(back.skipped.empty());
  EXPECT_EQ(back.bugs, g.corpus);
}

TEST(Generate, SpecValidation) {
  auto bad_row = exponential_spec(10, 1);
  bad_row.routing["Open"]["Closed"] = 0.3;
  EXPECT_THROW(bad_row.validate(), SpecError);

  auto missing_law = exponential_spec(10, 1);
  missing_law.sojourn.erase({"Open", "Closed"});
  EXPECT_THROW(missing_law.validate(), SpecError);

  auto bad_multiplier = exponential_spec(10, 1);
  bad_multiplier.reporters[0].multiplier = 0.0;
  EXPECT_THROW(bad_multiplier.validate(), SpecError);

  auto trapped = exponential_spec(10, 1);
  trapped.routing["Reopened"] = {{"Delivered", 1.0}};
  trapped.routing["Delivered"] = {{"Reopened", 1.0}};
  trapped.sojourn[{"Reopened", "Delivered"}] = {Sojourn::Kind::exponential, 1.0};
  EXPECT_THROW(trapped.validate(), SpecError);
  EXPECT_THROW(generate_corpus(trapped), SpecError);
}

TEST(Generate, ParsesShippedProfile) {
  const auto spec = parse_generator_spec(read_file(std::string(BUGFLOW_SOURCE_DIR) + "/profiles/synth_onap.json"));
  EXPECT_NO_THROW(spec.validate());
  EXPECT_EQ(spec.workflow.name, "onap");
  EXPECT_EQ(spec.reporters.size(), 40u);
  EXPECT_THROW(parse_generator_spec(R"({"workflow":"onap","routing":{"Open":{"Closed":2}}})"), Error);
}

TEST(Noise, ZeroConfigIsIdentity) {
  const auto g = generate_corpus(exponential_spec(200, 3));
  const auto noisy = inject_noise(g.corpus, NoiseConfig{}, builtin_workflow("onap"));
  EXPECT_EQ(noisy.corpus, g.corpus);
  EXPECT_TRUE(noisy.injections.empty());
}

TEST(Noise, PipelineUndoesEveryClass) {
  auto spec = exponential_spec(1000, 5);
  spec.min_sojourn_seconds = 3600;
  const auto g = generate_corpus(spec);
  const auto wf = builtin_workflow("onap");
  NoiseConfig cfg;
  cfg.transient_fraction = cfg.undefined_fraction = cfg.loop_fraction = cfg.reopen_fraction = 0.1;
  cfg.seed = 77;
  const auto noisy = inject_noise(g.corpus, cfg, wf);
  for (auto kind : {NoiseKind::transient, NoiseKind::undefined_state, NoiseKind::loop, NoiseKind::reopen_tail}) {
    EXPECT_EQ(noisy.count(kind), 100u) << to_string(kind);
  }
  const auto cleaned = apply_standard_pipeline(noisy.corpus, FilterConfig{}, wf);
  ASSERT_EQ(cleaned.corpus.size(), g.corpus.size());
  for (std::size_t i = 0; i < g.corpus.size(); ++i) {
    EXPECT_EQ(cleaned.corpus[i].transitions, g.corpus[i].transitions) << g.corpus[i].id;
    EXPECT_EQ(resolution_time(cleaned.corpus[i]), resolution_time(g.corpus[i]));
  }
  EXPECT_EQ(cleaned.report.merged_transient_states, noisy.count(NoiseKind::transient));
  EXPECT_EQ(cleaned.report.dropped_undefined_states, noisy.count(NoiseKind::undefined_state));
  EXPECT_EQ(cleaned.report.merged_loops, noisy.count(NoiseKind::loop));
  EXPECT_EQ(cleaned.report.truncated_tails, noisy.count(NoiseKind::reopen_tail));
  EXPECT_TRUE(cleaned.report.reconciles());
}

TEST(Noise, InjectionsAreReproducible) {
  const auto g = generate_corpus(exponential_spec(300, 6));
  NoiseConfig cfg;
  cfg.transient_fraction = 0.3;
  cfg.seed = 1;
  const auto a = inject_noise(g.corpus, cfg, builtin_workflow("onap"));
  const auto b = inject_noise(g.corpus, cfg, builtin_workflow("onap"));
  EXPECT_EQ(a.corpus, b.corpus);
  ASSERT_EQ(a.injections.size(), b.injections.size());
  for (std::size_t i = 0; i < a.injections.size(); ++i) EXPECT_EQ(a.injections[i].at, b.injections[i].at);
}

TEST(Noise, RejectsBadConfig) {
  const auto wf = builtin_workflow("onap");
  NoiseConfig cfg;
  cfg.undefined_state = "Open";
  EXPECT_THROW(inject_noise({}, cfg, wf), SpecError);
  cfg = NoiseConfig{};
  cfg.loop_fraction = 1.5;
  EXPECT_THROW(inject_noise({}, cfg, wf), SpecError);
  const auto parsed = parse_noise_config(R"({"transient_fraction":0.2,"seed":4})");
  EXPECT_EQ(parsed.transient_fraction, 0.2);
  EXPECT_EQ(parsed.seed, 4u);
}
