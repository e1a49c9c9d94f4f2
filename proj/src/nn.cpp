#include "bugflow/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace bugflow::nn {

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + e^z) without overflow
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace

Mlp::Mlp(std::size_t inputs, std::vector<std::size_t> hidden, Head head)
    : inputs_(inputs), hidden_(std::move(hidden)), head_(head),
      norm_mean_(inputs, 0.0), norm_stddev_(inputs, 1.0) {
  layout();
}

void Mlp::layout() {
  layers_.clear();
  std::size_t offset = 0;
  std::size_t in = inputs_;
  std::vector<std::size_t> widths = hidden_;
  widths.push_back(1);
  for (std::size_t out : widths) {
    layers_.push_back({in, out, offset, offset + in * out});
    offset += in * out + out;
    in = out;
  }
  params_.assign(offset, 0.0);
}

void Mlp::set_normalization(std::vector<double> mean, std::vector<double> stddev) {
  if (mean.size() != inputs_ || stddev.size() != inputs_) throw Error("normalization size mismatch");
  for (double& s : stddev) {
    if (!(s > 0.0) || !std::isfinite(s)) s = 1.0;
  }
  norm_mean_ = std::move(mean);
  norm_stddev_ = std::move(stddev);
}

void Mlp::initialize(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::fill(params_.begin(), params_.end(), 0.0);
  for (const auto& l : layers_) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(l.in)));
    for (std::size_t k = 0; k < l.in * l.out; ++k) params_[l.w_offset + k] = dist(rng);
  }
}

double Mlp::forward(std::span<const double> x, std::vector<std::vector<double>>* acts) const {
  std::vector<double> a(inputs_);
  for (std::size_t i = 0; i < inputs_; ++i) a[i] = (x[i] - norm_mean_[i]) / norm_stddev_[i];
  if (acts) acts->push_back(a);
  std::vector<double> z;
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const auto& l = layers_[li];
    z.assign(params_.begin() + static_cast<std::ptrdiff_t>(l.b_offset),
             params_.begin() + static_cast<std::ptrdiff_t>(l.b_offset + l.out));
    const double* w = params_.data() + l.w_offset;
    for (std::size_t i = 0; i < l.in; ++i) {
      const double ai = a[i];
      if (ai == 0.0) continue;
      const double* row = w + i * l.out;
      for (std::size_t o = 0; o < l.out; ++o) z[o] += ai * row[o];
    }
    if (li + 1 == layers_.size()) return z[0];
    for (double& v : z) v = v > 0.0 ? v : 0.0;
    a.swap(z);
    if (acts) acts->push_back(a);
  }
  return 0.0;
}

double Mlp::output(std::span<const double> x) const { return forward(x, nullptr); }

double Mlp::predict(std::span<const double> x) const {
  const double z = output(x);
  return head_ == Head::logistic ? sigmoid(z) : z;
}

double Mlp::loss(std::span<const Sample> batch) const {
  double total = 0.0;
  for (const auto& s : batch) {
    const double z = output(s.x);
    if (head_ == Head::logistic) {
      total += softplus(z) - s.target * z;
    } else {
      const double d = z - s.target;
      total += d * d;
    }
  }
  return total / static_cast<double>(batch.size());
}

double Mlp::loss_and_gradient(std::span<const Sample> batch, std::vector<double>& grad) const {
  grad.assign(params_.size(), 0.0);
  const double scale = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  std::vector<std::vector<double>> acts;
  std::vector<double> delta, prev;
  for (const auto& s : batch) {
    acts.clear();
    const double z = forward(s.x, &acts);
    double dz;
    if (head_ == Head::logistic) {
      total += softplus(z) - s.target * z;
      dz = sigmoid(z) - s.target;
    } else {
      const double d = z - s.target;
      total += d * d;
      dz = 2.0 * d;
    }
    delta.assign(1, dz * scale);
    for (std::size_t li = layers_.size(); li-- > 0;) {
      const auto& l = layers_[li];
      const auto& a = acts[li];  // input to this layer
      double* gw = grad.data() + l.w_offset;
      double* gb = grad.data() + l.b_offset;
      for (std::size_t o = 0; o < l.out; ++o) gb[o] += delta[o];
      for (std::size_t i = 0; i < l.in; ++i) {
        const double ai = a[i];
        if (ai == 0.0) continue;
        double* row = gw + i * l.out;
        for (std::size_t o = 0; o < l.out; ++o) row[o] += ai * delta[o];
      }
      if (li == 0) break;
      // back through the weights and the ReLU of the previous layer
      const double* w = params_.data() + l.w_offset;
      prev.assign(l.in, 0.0);
      for (std::size_t i = 0; i < l.in; ++i) {
        if (a[i] <= 0.0) continue;
        const double* row = w + i * l.out;
        double sum = 0.0;
        for (std::size_t o = 0; o < l.out; ++o) sum += row[o] * delta[o];
        prev[i] = sum;
      }
      delta.swap(prev);
    }
  }
  return total * scale;
}

Adam::Adam(std::size_t n_params, AdamOptions options) : opt_(options), m_(n_params, 0.0), v_(n_params, 0.0) {}

void Adam::step(std::vector<double>& params, const std::vector<double>& grad) {
  ++t_;
  const double c1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
  const double lr = opt_.learning_rate * std::sqrt(c2) / c1;
  for (std::size_t k = 0; k < params.size(); ++k) {
    m_[k] = opt_.beta1 * m_[k] + (1.0 - opt_.beta1) * grad[k];
    v_[k] = opt_.beta2 * v_[k] + (1.0 - opt_.beta2) * grad[k] * grad[k];
    params[k] -= lr * m_[k] / (std::sqrt(v_[k]) + opt_.epsilon * std::sqrt(c2));
  }
}

std::vector<double> train(Mlp& net, std::span<const Sample> data, const TrainOptions& options) {
  if (data.empty()) throw TrainingError("no training data");
  if (options.batch_size == 0) throw TrainingError("batch size must be positive");
  std::mt19937_64 rng(options.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<Sample> batch;
  batch.reserve(options.batch_size);
  std::vector<double> grad;
  Adam adam(net.parameters().size(), options.adam);

  std::vector<double> history;
  history.reserve(options.epochs + 1);
  history.push_back(net.loss(data));
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size, ++batch_index) {
      batch.clear();
      const std::size_t end = std::min(order.size(), start + options.batch_size);
      for (std::size_t k = start; k < end; ++k) batch.push_back(data[order[k]]);
      const double l = net.loss_and_gradient(batch, grad);
      if (!std::isfinite(l)) {
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(batch_index));
      }
      epoch_loss += l * static_cast<double>(batch.size());
      adam.step(net.parameters(), grad);
    }
    history.push_back(epoch_loss / static_cast<double>(data.size()));
  }
  return history;
}

}  // namespace bugflow::nn
