#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bugflow/types.hpp"

namespace bugflow {

class SpecError : public Error {
 public:
  using Error::Error;
};

struct Sojourn {
  enum class Kind { exponential, lognormal };
  Kind kind = Kind::exponential;
  double rate_per_hour = 1.0;  // exponential
  double mu = 0.0;             // lognormal, log-hours
  double sigma = 1.0;

  double mean_hours() const;
};

struct SynthEntity {
  std::string id;
  double multiplier = 1.0;
};

struct GeneratorSpec {
  WorkflowSpec workflow;
  std::map<std::string, std::map<std::string, double>> routing;
  std::map<TransitionKey, Sojourn> sojourn;
  std::vector<SynthEntity> reporters;
  std::vector<SynthEntity> assignees;
  std::vector<SynthEntity> subprojects{{"core", 1.0}};
  double self_assign_prob = 0.0;
  double self_assign_multiplier = 1.0;
  std::array<double, 5> priority_mix{0.2, 0.2, 0.2, 0.2, 0.2};
  std::array<double, 5> priority_multiplier{1.0, 1.0, 1.0, 1.0, 1.0};
  std::size_t n_bugs = 1000;
  std::uint64_t seed = 0;

  // Added to every sojourn so generated histories have no transient states.
  std::int64_t min_sojourn_seconds = 0;
  Timestamp start_time = 1577836800;  // 2020-01-01T00:00:00Z
  std::int64_t interarrival_seconds = 3600;
  // Mean gap between non-status edits; zero disables them.
  double comment_interval_hours = 0.0;
  std::string project = "SYN";
  std::string resolution_status = "Fixed";

  /// Throws SpecError when rows do not sum to one, an edge lacks a sojourn
  /// law, a multiplier is not positive, or the terminal is unreachable.
  void validate() const;
};

/// JSON; see profiles/synth_*.json for the accepted keys. Entity lists may be
/// given explicitly or as {"count", "prefix", "min_multiplier",
/// "max_multiplier"} with log-uniform multipliers drawn from the generator seed.
GeneratorSpec parse_generator_spec(std::string_view json_text);

struct TruthRow {
  std::string bug_id;
  std::vector<std::string> path;
  std::vector<double> sojourn_hours;
  double speed_multiplier = 1.0;
  double resolution_hours = 0.0;
};

struct Generated {
  Corpus corpus;
  std::vector<TruthRow> truth;
};

/// Each bug draws from its own generator seeded by (seed, index), so output
/// is independent of evaluation order.
Generated generate_corpus(const GeneratorSpec& spec);

void write_truth_csv(const std::vector<TruthRow>& truth, std::ostream& out);

struct NoiseConfig {
  double transient_fraction = 0.0;
  double undefined_fraction = 0.0;
  double loop_fraction = 0.0;
  double reopen_fraction = 0.0;
  std::int64_t transient_threshold_seconds = 300;
  std::string undefined_state = "Needs Triage";
  std::string reopen_state = "Reopened";
  std::uint64_t seed = 0;
};

NoiseConfig parse_noise_config(std::string_view json_text);

enum class NoiseKind { transient, undefined_state, loop, reopen_tail };

std::string to_string(NoiseKind kind);

struct Injection {
  std::string bug_id;
  NoiseKind kind = NoiseKind::transient;
  std::string state;  // the inserted state
  Timestamp at = 0;
};

struct NoisyCorpus {
  Corpus corpus;
  std::vector<Injection> injections;

  std::size_t count(NoiseKind kind) const;
};

/// Each noisy bug receives exactly one edit, chosen so that the standard
/// pipeline undoes it and reports it once. A class's share is taken from the
/// bugs that can carry it; if too few qualify, fewer are injected.
NoisyCorpus inject_noise(const Corpus& clean, const NoiseConfig& config, const WorkflowSpec& workflow);

}  // namespace bugflow
