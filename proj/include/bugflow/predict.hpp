#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "bugflow/filter.hpp"
#include "bugflow/nn.hpp"
#include "bugflow/types.hpp"

namespace bugflow {

// Feature layout: priority one-hot (5), same_person, reporter count/median,
// assignee count/median, subproject count/median.
inline constexpr std::size_t kFeatureDim = 12;
using FeatureVector = std::array<double, kFeatureDim>;

namespace feature {
inline constexpr std::size_t kPriority = 0;
inline constexpr std::size_t kSamePerson = 5;
inline constexpr std::size_t kReporterCount = 6;
inline constexpr std::size_t kReporterMedian = 7;
inline constexpr std::size_t kAssigneeCount = 8;
inline constexpr std::size_t kAssigneeMedian = 9;
inline constexpr std::size_t kSubprojectCount = 10;
inline constexpr std::size_t kSubprojectMedian = 11;
}  // namespace feature

struct EntityStats {
  std::size_t count = 0;
  double median_hours = 0.0;
  bool operator==(const EntityStats&) const = default;
};

/// Training-split statistics used to encode entity identities.
struct EncoderState {
  std::map<std::string, EntityStats> reporters;
  std::map<std::string, EntityStats> assignees;
  std::map<std::string, EntityStats> subprojects;
  double global_median_hours = 0.0;
  std::size_t training_size = 0;
  bool operator==(const EncoderState&) const = default;
};

struct Example {
  FeatureVector x{};
  double resolution_hours = 0.0;
  std::string bug_id;
};

struct Dataset {
  std::vector<Example> examples;
  EncoderState encoder;
};

/// Statistics over the bugs named in training_ids only. Every bug must reach
/// `terminal` after a positive time.
EncoderState fit_encoder(const Corpus& corpus, const std::set<std::string>& training_ids,
                         const std::string& terminal = "Closed");
FeatureVector encode(const BugRecord& bug, const EncoderState& encoder);
Dataset encode_features(const Corpus& corpus, const std::set<std::string>& training_ids,
                        const std::string& terminal = "Closed");

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Uniform random partition: floor(fraction * n) training indices, rest test.
/// Both lists are sorted. Needs n >= 10.
SplitIndices split_indices(std::size_t n, double train_fraction, std::uint64_t seed);
std::pair<Dataset, Dataset> split(const Dataset& dataset, double train_fraction, std::uint64_t seed);

enum class SpeedClass { fast, slow };

/// fast iff hours < training_median; ties are slow.
SpeedClass label_fast_slow(double hours, double training_median);

enum class ModelKind { knn, naive_bayes, nn_binary, nn_regression };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& text);

struct KnnParams {
  std::size_t k = 5;
  FeatureVector mean{};
  FeatureVector stddev{};  // zero marks a constant feature
  std::vector<FeatureVector> points;  // normalized
  std::vector<SpeedClass> labels;
};

struct NaiveBayesParams {
  std::array<double, 2> log_prior{};  // indexed by SpeedClass
  std::array<FeatureVector, 2> mean{};
  std::array<FeatureVector, 2> variance{};
};

enum class NnMode { binary, regression };

struct NnOptions {
  std::size_t epochs = 200;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  std::vector<std::size_t> hidden{64, 32, 16};
  std::uint64_t seed = 0;
};

struct TrainedModel {
  ModelKind kind = ModelKind::knn;
  double training_median_hours = 0.0;
  std::variant<KnnParams, NaiveBayesParams, nn::Mlp> params;
  // neural models only
  std::vector<double> loss_history;
  std::optional<NnOptions> nn_options;
};

double median_hours(const Dataset& dataset);

/// z-normalization with training statistics; a constant feature maps to 0.
FeatureVector knn_normalize(const KnnParams& p, const FeatureVector& x);

TrainedModel train_knn(const Dataset& train, std::size_t k = 5);
TrainedModel train_nb(const Dataset& train);

inline constexpr double kNbVarianceFloor = 1e-9;

/// Needs at least 2 * batch_size examples.
TrainedModel train_nn(const Dataset& train, NnMode mode, const NnOptions& options);

SpeedClass predict_class(const TrainedModel& model, const FeatureVector& x);
/// Hours for regression networks (always positive).
double predict_time(const TrainedModel& model, const FeatureVector& x);

struct RepeatResult {
  double accuracy = 0.0;
  std::optional<double> median_normalized_error;
  std::size_t n_test = 0;
};

struct EvalReport {
  double accuracy = 0.0;
  std::optional<double> median_normalized_error;
  std::size_t n_test = 0;
  std::vector<RepeatResult> per_repeat;
};

EvalReport evaluate(const TrainedModel& model, const Dataset& test);

enum class FilterVariant { none, mild, extreme, inactivity };

std::string to_string(FilterVariant v);
FilterVariant parse_filter_variant(const std::string& text);

struct CvConfig {
  std::size_t repeats = 10;
  std::vector<ModelKind> kinds{ModelKind::knn, ModelKind::naive_bayes, ModelKind::nn_binary,
                               ModelKind::nn_regression};
  FilterVariant filter_variant = FilterVariant::none;
  int inactivity_gap_days = 30;
  double train_fraction = 0.8;
  std::uint64_t base_seed = 0;
  std::size_t knn_k = 5;
  NnOptions nn;
  std::string terminal = "Closed";
};

/// Repeat r splits with seed base_seed + r, re-encodes entity features from
/// the training split, trains every kind and evaluates on the test split.
std::map<ModelKind, EvalReport> cross_validate(const Corpus& corpus, const CvConfig& config);

/// Versioned model file carrying the encoder statistics next to the weights.
void write_model_bundle(const TrainedModel& model, const EncoderState& encoder, std::ostream& out);
std::pair<TrainedModel, EncoderState> read_model_bundle(std::istream& in);

}  // namespace bugflow
