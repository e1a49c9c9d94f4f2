#include "bugflow/predict.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>
#include <thread>

#include "bugflow/numeric.hpp"
#include "bugflow/stats.hpp"
#include "json.hpp"

namespace bugflow {

using nlohmann::json;

namespace {

constexpr int kBundleVersion = 1;
constexpr double kMinPredictedHours = 1.0 / 3600.0;

void add_stat(std::map<std::string, std::vector<double>>& acc, const std::string& key, double hours) {
  acc[key].push_back(hours);
}

std::map<std::string, EntityStats> summarize(std::map<std::string, std::vector<double>>& acc) {
  std::map<std::string, EntityStats> out;
  for (auto& [key, hours] : acc) out[key] = {hours.size(), median(hours)};
  return out;
}

void lookup(const std::map<std::string, EntityStats>& table, const std::string& key, double global_median,
            double& count, double& med) {
  auto it = table.find(key);
  if (it == table.end()) {
    count = 0.0;
    med = global_median;
  } else {
    count = static_cast<double>(it->second.count);
    med = it->second.median_hours;
  }
}

std::size_t idx(SpeedClass c) { return c == SpeedClass::fast ? 0 : 1; }

double positive_hours(double h, const std::string& bug_id) {
  if (!(h > 0.0) || !std::isfinite(h)) throw Error("bug " + bug_id + ": resolution time must be positive");
  return h;
}

void require_nonempty(const Dataset& d, const char* what) {
  if (d.examples.empty()) throw Error(std::string(what) + ": empty dataset");
}

std::pair<FeatureVector, FeatureVector> column_moments(const Dataset& d) {
  FeatureVector mu{}, sd{};
  const double n = static_cast<double>(d.examples.size());
  for (const auto& e : d.examples)
    for (std::size_t j = 0; j < kFeatureDim; ++j) mu[j] += e.x[j];
  for (double& v : mu) v /= n;
  for (const auto& e : d.examples)
    for (std::size_t j = 0; j < kFeatureDim; ++j) sd[j] += (e.x[j] - mu[j]) * (e.x[j] - mu[j]);
  for (double& v : sd) v = std::sqrt(v / n);
  return {mu, sd};
}

}  // namespace

EncoderState fit_encoder(const Corpus& corpus, const std::set<std::string>& training_ids,
                         const std::string& terminal) {
  if (training_ids.empty()) throw Error("empty training set");
  std::map<std::string, std::vector<double>> rep, asg, sub;
  std::vector<double> all;
  std::size_t seen = 0;
  for (const auto& bug : corpus) {
    if (!training_ids.count(bug.id)) continue;
    ++seen;
    const double h = positive_hours(resolution_time(bug, terminal), bug.id);
    all.push_back(h);
    add_stat(rep, bug.reporter_id, h);
    add_stat(asg, bug.assignee_id, h);
    add_stat(sub, bug.subproject, h);
  }
  if (seen != training_ids.size()) throw Error("training ids not found in corpus");
  EncoderState enc;
  enc.reporters = summarize(rep);
  enc.assignees = summarize(asg);
  enc.subprojects = summarize(sub);
  enc.global_median_hours = median(all);
  enc.training_size = all.size();
  return enc;
}

FeatureVector encode(const BugRecord& bug, const EncoderState& enc) {
  FeatureVector x{};
  if (bug.priority < 1 || bug.priority > 5) throw Error("bug " + bug.id + ": priority outside 1..5");
  x[feature::kPriority + static_cast<std::size_t>(bug.priority - 1)] = 1.0;
  x[feature::kSamePerson] = bug.is_assigned() && bug.reporter_id == bug.assignee_id ? 1.0 : 0.0;
  lookup(enc.reporters, bug.reporter_id, enc.global_median_hours, x[feature::kReporterCount],
         x[feature::kReporterMedian]);
  lookup(enc.assignees, bug.assignee_id, enc.global_median_hours, x[feature::kAssigneeCount],
         x[feature::kAssigneeMedian]);
  lookup(enc.subprojects, bug.subproject, enc.global_median_hours, x[feature::kSubprojectCount],
         x[feature::kSubprojectMedian]);
  return x;
}

Dataset encode_features(const Corpus& corpus, const std::set<std::string>& training_ids,
                        const std::string& terminal) {
  Dataset d;
  d.encoder = fit_encoder(corpus, training_ids, terminal);
  d.examples.reserve(corpus.size());
  for (const auto& bug : corpus) {
    d.examples.push_back(
        {encode(bug, d.encoder), positive_hours(resolution_time(bug, terminal), bug.id), bug.id});
  }
  return d;
}

SplitIndices split_indices(std::size_t n, double train_fraction, std::uint64_t seed) {
  if (n < 10) throw Error("dataset too small to split (" + std::to_string(n) + " < 10)");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw Error("train fraction must be in (0, 1)");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n)));
  SplitIndices s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, double train_fraction, std::uint64_t seed) {
  const auto s = split_indices(dataset.examples.size(), train_fraction, seed);
  std::pair<Dataset, Dataset> out;
  out.first.encoder = out.second.encoder = dataset.encoder;
  for (auto i : s.train) out.first.examples.push_back(dataset.examples[i]);
  for (auto i : s.test) out.second.examples.push_back(dataset.examples[i]);
  return out;
}

SpeedClass label_fast_slow(double hours, double training_median) {
  if (!(training_median > 0.0)) throw Error("training median must be positive");
  return hours < training_median ? SpeedClass::fast : SpeedClass::slow;
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::knn: return "knn";
    case ModelKind::naive_bayes: return "naive_bayes";
    case ModelKind::nn_binary: return "nn_binary";
    case ModelKind::nn_regression: return "nn_regression";
  }
  return "?";
}

ModelKind parse_model_kind(const std::string& text) {
  for (auto k : {ModelKind::knn, ModelKind::naive_bayes, ModelKind::nn_binary, ModelKind::nn_regression}) {
    if (to_string(k) == text) return k;
  }
  throw Error("unknown model kind '" + text + "' (expected knn, naive_bayes, nn_binary, nn_regression)");
}

double median_hours(const Dataset& dataset) {
  require_nonempty(dataset, "median");
  std::vector<double> h;
  h.reserve(dataset.examples.size());
  for (const auto& e : dataset.examples) h.push_back(e.resolution_hours);
  return median(std::move(h));
}

FeatureVector knn_normalize(const KnnParams& p, const FeatureVector& x) {
  FeatureVector z{};
  for (std::size_t j = 0; j < kFeatureDim; ++j) z[j] = p.stddev[j] > 0.0 ? (x[j] - p.mean[j]) / p.stddev[j] : 0.0;
  return z;
}

TrainedModel train_knn(const Dataset& train, std::size_t k) {
  require_nonempty(train, "knn");
  if (k == 0 || k > train.examples.size()) throw Error("knn: k must be in [1, training size]");
  TrainedModel m;
  m.kind = ModelKind::knn;
  m.training_median_hours = median_hours(train);
  KnnParams p;
  p.k = k;
  std::tie(p.mean, p.stddev) = column_moments(train);
  for (const auto& e : train.examples) {
    p.points.push_back(knn_normalize(p, e.x));
    p.labels.push_back(label_fast_slow(e.resolution_hours, m.training_median_hours));
  }
  m.params = std::move(p);
  return m;
}

TrainedModel train_nb(const Dataset& train) {
  require_nonempty(train, "naive bayes");
  TrainedModel m;
  m.kind = ModelKind::naive_bayes;
  m.training_median_hours = median_hours(train);
  NaiveBayesParams p;
  std::array<std::size_t, 2> n{};
  for (const auto& e : train.examples) {
    const auto c = idx(label_fast_slow(e.resolution_hours, m.training_median_hours));
    ++n[c];
    for (std::size_t j = 0; j < kFeatureDim; ++j) p.mean[c][j] += e.x[j];
  }
  if (n[0] == 0 || n[1] == 0) throw Error("naive bayes: training set has a single class");
  for (std::size_t c = 0; c < 2; ++c)
    for (double& v : p.mean[c]) v /= static_cast<double>(n[c]);
  for (const auto& e : train.examples) {
    const auto c = idx(label_fast_slow(e.resolution_hours, m.training_median_hours));
    for (std::size_t j = 0; j < kFeatureDim; ++j) {
      const double d = e.x[j] - p.mean[c][j];
      p.variance[c][j] += d * d;
    }
  }
  const double total = static_cast<double>(train.examples.size());
  for (std::size_t c = 0; c < 2; ++c) {
    p.log_prior[c] = std::log(static_cast<double>(n[c]) / total);
    for (double& v : p.variance[c]) v = std::max(v / static_cast<double>(n[c]), kNbVarianceFloor);
  }
  m.params = p;
  return m;
}

TrainedModel train_nn(const Dataset& train, NnMode mode, const NnOptions& options) {
  if (train.examples.size() < 2 * options.batch_size) {
    throw Error("neural network needs at least " + std::to_string(2 * options.batch_size) + " training examples");
  }
  TrainedModel m;
  m.kind = mode == NnMode::binary ? ModelKind::nn_binary : ModelKind::nn_regression;
  m.training_median_hours = median_hours(train);
  m.nn_options = options;

  nn::Mlp net(kFeatureDim, options.hidden, mode == NnMode::binary ? nn::Head::logistic : nn::Head::linear);
  auto [mu, sd] = column_moments(train);
  net.set_normalization({mu.begin(), mu.end()}, {sd.begin(), sd.end()});
  net.initialize(options.seed);

  std::vector<nn::Sample> samples;
  samples.reserve(train.examples.size());
  double target_sum = 0.0;
  for (const auto& e : train.examples) {
    double t;
    if (mode == NnMode::binary) {
      t = label_fast_slow(e.resolution_hours, m.training_median_hours) == SpeedClass::slow ? 1.0 : 0.0;
    } else {
      t = std::log1p(e.resolution_hours);
    }
    target_sum += t;
    samples.push_back({std::span<const double>(e.x.data(), e.x.size()), t});
  }
  // regression starts as the constant mean-target predictor
  if (mode == NnMode::regression) {
    auto& p = net.parameters();
    const std::size_t fan_in = options.hidden.empty() ? kFeatureDim : options.hidden.back();
    std::fill(p.end() - static_cast<std::ptrdiff_t>(fan_in) - 1, p.end(), 0.0);
    p.back() = target_sum / static_cast<double>(samples.size());
  }

  nn::TrainOptions topt;
  topt.epochs = options.epochs;
  topt.batch_size = options.batch_size;
  topt.adam.learning_rate = options.learning_rate;
  topt.seed = options.seed;
  m.loss_history = nn::train(net, samples, topt);
  m.params = std::move(net);
  return m;
}

namespace {

SpeedClass knn_vote(const KnnParams& p, const FeatureVector& x) {
  const FeatureVector z = knn_normalize(p, x);
  const std::size_t n = p.points.size();
  std::vector<std::pair<double, std::size_t>> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < kFeatureDim; ++j) {
      const double v = z[j] - p.points[i][j];
      s += v * v;
    }
    d[i] = {s, i};
  }
  const std::size_t k = std::min(p.k, n);
  std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
  std::size_t slow = 0;
  for (std::size_t i = 0; i < k; ++i) slow += p.labels[d[i].second] == SpeedClass::slow;
  if (2 * slow > k) return SpeedClass::slow;
  if (2 * slow < k) return SpeedClass::fast;
  return p.labels[d[0].second];
}

SpeedClass nb_decide(const NaiveBayesParams& p, const FeatureVector& x) {
  std::array<double, 2> lp{};
  for (std::size_t c = 0; c < 2; ++c) {
    double s = p.log_prior[c];
    for (std::size_t j = 0; j < kFeatureDim; ++j) {
      const double v = p.variance[c][j];
      const double d = x[j] - p.mean[c][j];
      s -= 0.5 * std::log(2.0 * std::numbers::pi * v) + d * d / (2.0 * v);
    }
    lp[c] = s;
  }
  return lp[0] > lp[1] ? SpeedClass::fast : SpeedClass::slow;
}

}  // namespace

double predict_time(const TrainedModel& model, const FeatureVector& x) {
  if (model.kind != ModelKind::nn_regression) throw Error("predict_time needs a regression network");
  const auto& net = std::get<nn::Mlp>(model.params);
  const double z = net.output(std::span<const double>(x.data(), x.size()));
  return std::max(std::expm1(z), kMinPredictedHours);
}

SpeedClass predict_class(const TrainedModel& model, const FeatureVector& x) {
  switch (model.kind) {
    case ModelKind::knn: return knn_vote(std::get<KnnParams>(model.params), x);
    case ModelKind::naive_bayes: return nb_decide(std::get<NaiveBayesParams>(model.params), x);
    case ModelKind::nn_binary: {
      const auto& net = std::get<nn::Mlp>(model.params);
      return net.output(std::span<const double>(x.data(), x.size())) >= 0.0 ? SpeedClass::slow : SpeedClass::fast;
    }
    case ModelKind::nn_regression:
      return label_fast_slow(predict_time(model, x), model.training_median_hours);
  }
  throw Error("unknown model kind");
}

EvalReport evaluate(const TrainedModel& model, const Dataset& test) {
  require_nonempty(test, "evaluate");
  std::size_t correct = 0;
  std::vector<double> errors;
  for (const auto& e : test.examples) {
    const auto truth = label_fast_slow(e.resolution_hours, model.training_median_hours);
    if (model.kind == ModelKind::nn_regression) {
      const double h = predict_time(model, e.x);
      errors.push_back(std::abs(h - e.resolution_hours) / e.resolution_hours);
      correct += label_fast_slow(h, model.training_median_hours) == truth;
    } else {
      correct += predict_class(model, e.x) == truth;
    }
  }
  EvalReport r;
  r.n_test = test.examples.size();
  r.accuracy = static_cast<double>(correct) / static_cast<double>(r.n_test);
  if (!errors.empty()) r.median_normalized_error = median(std::move(errors));
  r.per_repeat.push_back({r.accuracy, r.median_normalized_error, r.n_test});
  return r;
}

std::string to_string(FilterVariant v) {
  switch (v) {
    case FilterVariant::none: return "none";
    case FilterVariant::mild: return "mild";
    case FilterVariant::extreme: return "extreme";
    case FilterVariant::inactivity: return "inactivity";
  }
  return "?";
}

FilterVariant parse_filter_variant(const std::string& text) {
  for (auto v : {FilterVariant::none, FilterVariant::mild, FilterVariant::extreme, FilterVariant::inactivity}) {
    if (to_string(v) == text) return v;
  }
  throw Error("unknown filter variant '" + text + "' (expected none, mild, extreme, inactivity)");
}

namespace {

Corpus apply_variant(const Corpus& corpus, const CvConfig& cfg) {
  switch (cfg.filter_variant) {
    case FilterVariant::none: return corpus;
    case FilterVariant::mild: return tukey_outlier_filter(corpus, OutlierMode::mild, cfg.terminal).corpus;
    case FilterVariant::extreme: return tukey_outlier_filter(corpus, OutlierMode::extreme, cfg.terminal).corpus;
    case FilterVariant::inactivity: return inactivity_filter(corpus, cfg.inactivity_gap_days, cfg.terminal).corpus;
  }
  return corpus;
}

std::map<ModelKind, RepeatResult> run_repeat(const Corpus& corpus, const CvConfig& cfg, std::size_t r) {
  const std::uint64_t seed = cfg.base_seed + r;
  const auto s = split_indices(corpus.size(), cfg.train_fraction, seed);
  std::set<std::string> ids;
  for (auto i : s.train) ids.insert(corpus[i].id);
  const Dataset all = encode_features(corpus, ids, cfg.terminal);
  Dataset train, test;
  train.encoder = test.encoder = all.encoder;
  for (auto i : s.train) train.examples.push_back(all.examples[i]);
  for (auto i : s.test) test.examples.push_back(all.examples[i]);

  std::map<ModelKind, RepeatResult> out;
  for (auto kind : cfg.kinds) {
    TrainedModel m;
    NnOptions nn = cfg.nn;
    nn.seed = seed * 4 + static_cast<std::uint64_t>(kind);
    switch (kind) {
      case ModelKind::knn: m = train_knn(train, cfg.knn_k); break;
      case ModelKind::naive_bayes: m = train_nb(train); break;
      case ModelKind::nn_binary: m = train_nn(train, NnMode::binary, nn); break;
      case ModelKind::nn_regression: m = train_nn(train, NnMode::regression, nn); break;
    }
    const auto e = evaluate(m, test);
    out[kind] = e.per_repeat.front();
  }
  return out;
}

}  // namespace

std::map<ModelKind, EvalReport> cross_validate(const Corpus& corpus, const CvConfig& config) {
  if (config.repeats == 0) throw Error("repeats must be positive");
  const Corpus data = apply_variant(corpus, config);

  std::vector<std::map<ModelKind, RepeatResult>> results(config.repeats);
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), config.repeats));
  if (workers == 1) {
    for (std::size_t r = 0; r < config.repeats; ++r) results[r] = run_repeat(data, config, r);
  } else {
    for (std::size_t start = 0; start < config.repeats; start += workers) {
      std::vector<std::future<std::map<ModelKind, RepeatResult>>> jobs;
      const std::size_t end = std::min(config.repeats, start + workers);
      for (std::size_t r = start; r < end; ++r) {
        jobs.push_back(std::async(std::launch::async, [&data, &config, r] { return run_repeat(data, config, r); }));
      }
      for (std::size_t r = start; r < end; ++r) results[r] = jobs[r - start].get();
    }
  }

  std::map<ModelKind, EvalReport> out;
  for (auto kind : config.kinds) {
    EvalReport rep;
    double acc = 0.0, err = 0.0;
    bool has_err = false;
    for (const auto& per : results) {
      const auto& rr = per.at(kind);
      rep.per_repeat.push_back(rr);
      acc += rr.accuracy;
      if (rr.median_normalized_error) {
        has_err = true;
        err += *rr.median_normalized_error;
      }
    }
    const double n = static_cast<double>(config.repeats);
    rep.accuracy = acc / n;
    if (has_err) rep.median_normalized_error = err / n;
    rep.n_test = rep.per_repeat.front().n_test;
    out[kind] = std::move(rep);
  }
  return out;
}

namespace {

json entity_table(const std::map<std::string, EntityStats>& t) {
  json j = json::object();
  for (const auto& [k, v] : t) j[k] = {v.count, v.median_hours};
  return j;
}

std::map<std::string, EntityStats> read_entity_table(const json& j) {
  std::map<std::string, EntityStats> t;
  for (const auto& [k, v] : j.items()) t[k] = {v.at(0).get<std::size_t>(), v.at(1).get<double>()};
  return t;
}

template <std::size_t N>
json arr(const std::array<double, N>& a) {
  return json(std::vector<double>(a.begin(), a.end()));
}

FeatureVector feature_vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != kFeatureDim) throw Error("model file: feature vector of wrong length");
  FeatureVector f{};
  std::copy(v.begin(), v.end(), f.begin());
  return f;
}

}  // namespace

void write_model_bundle(const TrainedModel& model, const EncoderState& encoder, std::ostream& out) {
  nlohmann::ordered_json j;
  j["format"] = "bugflow-predictor";
  j["version"] = kBundleVersion;
  j["kind"] = to_string(model.kind);
  j["training_median_hours"] = model.training_median_hours;
  j["encoder"] = {{"reporters", entity_table(encoder.reporters)},
                  {"assignees", entity_table(encoder.assignees)},
                  {"subprojects", entity_table(encoder.subprojects)},
                  {"global_median_hours", encoder.global_median_hours},
                  {"training_size", encoder.training_size}};
  if (const auto* p = std::get_if<KnnParams>(&model.params)) {
    json pts = json::array();
    for (const auto& x : p->points) pts.push_back(arr(x));
    std::vector<int> labels;
    for (auto c : p->labels) labels.push_back(c == SpeedClass::slow ? 1 : 0);
    j["knn"] = {{"k", p->k}, {"mean", arr(p->mean)}, {"stddev", arr(p->stddev)}, {"points", pts}, {"labels", labels}};
  } else if (const auto* p = std::get_if<NaiveBayesParams>(&model.params)) {
    j["naive_bayes"] = {{"log_prior", arr(p->log_prior)},
                        {"mean", {arr(p->mean[0]), arr(p->mean[1])}},
                        {"variance", {arr(p->variance[0]), arr(p->variance[1])}}};
  } else {
    const auto& net = std::get<nn::Mlp>(model.params);
    nlohmann::ordered_json a;
    a["inputs"] = net.inputs();
    a["hidden"] = net.hidden();
    a["activation"] = "relu";
    a["head"] = net.head() == nn::Head::logistic ? "logistic" : "linear";
    a["target"] = net.head() == nn::Head::logistic ? "slow" : "log1p_hours";
    j["architecture"] = a;
    if (model.nn_options) {
      j["training"] = {{"optimizer", "adam"},
                       {"learning_rate", model.nn_options->learning_rate},
                       {"epochs", model.nn_options->epochs},
                       {"batch_size", model.nn_options->batch_size},
                       {"seed", model.nn_options->seed}};
    }
    j["normalization"] = {{"mean", net.norm_mean()}, {"stddev", net.norm_stddev()}};
    j["parameters"] = net.parameters();
    j["loss_history"] = model.loss_history;
  }
  out << j.dump(1) << '\n';
}

std::pair<TrainedModel, EncoderState> read_model_bundle(std::istream& in) {
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(std::string("model file: ") + e.what());
  }
  try {
    if (j.value("format", "") != "bugflow-predictor") throw Error("model file: not a predictor bundle");
    if (j.at("version").get<int>() != kBundleVersion) throw Error("model file: unsupported version");
    TrainedModel m;
    m.kind = parse_model_kind(j.at("kind").get<std::string>());
    m.training_median_hours = j.at("training_median_hours").get<double>();
    EncoderState enc;
    const auto& e = j.at("encoder");
    enc.reporters = read_entity_table(e.at("reporters"));
    enc.assignees = read_entity_table(e.at("assignees"));
    enc.subprojects = read_entity_table(e.at("subprojects"));
    enc.global_median_hours = e.at("global_median_hours").get<double>();
    enc.training_size = e.at("training_size").get<std::size_t>();

    switch (m.kind) {
      case ModelKind::knn: {
        const auto& k = j.at("knn");
        KnnParams p;
        p.k = k.at("k").get<std::size_t>();
        p.mean = feature_vec(k.at("mean"));
        p.stddev = feature_vec(k.at("stddev"));
        for (const auto& x : k.at("points")) p.points.push_back(feature_vec(x));
        for (int c : k.at("labels").get<std::vector<int>>()) p.labels.push_back(c ? SpeedClass::slow : SpeedClass::fast);
        if (p.points.size() != p.labels.size() || p.k == 0 || p.k > p.points.size()) {
          throw Error("model file: inconsistent knn parameters");
        }
        m.params = std::move(p);
        break;
      }
      case ModelKind::naive_bayes: {
        const auto& b = j.at("naive_bayes");
        NaiveBayesParams p;
        const auto lp = b.at("log_prior").get<std::vector<double>>();
        if (lp.size() != 2) throw Error("model file: bad log_prior");
        p.log_prior = {lp[0], lp[1]};
        for (std::size_t c = 0; c < 2; ++c) {
          p.mean[c] = feature_vec(b.at("mean").at(c));
          p.variance[c] = feature_vec(b.at("variance").at(c));
        }
        m.params = p;
        break;
      }
      case ModelKind::nn_binary:
      case ModelKind::nn_regression: {
        const auto& a = j.at("architecture");
        const auto head = a.at("head").get<std::string>() == "logistic" ? nn::Head::logistic : nn::Head::linear;
        nn::Mlp net(a.at("inputs").get<std::size_t>(), a.at("hidden").get<std::vector<std::size_t>>(), head);
        net.set_normalization(j.at("normalization").at("mean").get<std::vector<double>>(),
                              j.at("normalization").at("stddev").get<std::vector<double>>());
        auto params = j.at("parameters").get<std::vector<double>>();
        if (params.size() != net.parameters().size()) throw Error("model file: parameter count mismatch");
        net.parameters() = std::move(params);
        m.params = std::move(net);
        m.loss_history = j.value("loss_history", std::vector<double>{});
        if (j.contains("training")) {
          const auto& t = j.at("training");
          NnOptions o;
          o.learning_rate = t.at("learning_rate").get<double>();
          o.epochs = t.at("epochs").get<std::size_t>();
          o.batch_size = t.at("batch_size").get<std::size_t>();
          o.seed = t.at("seed").get<std::uint64_t>();
          o.hidden = a.at("hidden").get<std::vector<std::size_t>>();
          m.nn_options = o;
        }
        break;
      }
    }
    return {std::move(m), std::move(enc)};
  } catch (const json::exception& e) {
    throw Error(std::string("model file: ") + e.what());
  }
}

}  // namespace bugflow
