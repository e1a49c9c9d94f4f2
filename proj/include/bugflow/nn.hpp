#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "bugflow/types.hpp"

namespace bugflow::nn {

enum class Head {
  logistic,  // sigmoid output, binary cross-entropy
  linear,    // identity output, mean squared error
};

struct Sample {
  std::span<const double> x;
  double target = 0.0;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Feed-forward network: an input normalization layer (fixed affine map from
/// training mean/stddev), fully connected ReLU hidden layers, and one output
/// unit. All weights and biases live in one flat parameter vector.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::size_t inputs, std::vector<std::size_t> hidden, Head head);

  std::size_t inputs() const { return inputs_; }
  const std::vector<std::size_t>& hidden() const { return hidden_; }
  Head head() const { return head_; }

  /// Sets the normalization constants; zero deviations are replaced by one.
  void set_normalization(std::vector<double> mean, std::vector<double> stddev);
  const std::vector<double>& norm_mean() const { return norm_mean_; }
  const std::vector<double>& norm_stddev() const { return norm_stddev_; }

  std::vector<double>& parameters() { return params_; }
  const std::vector<double>& parameters() const { return params_; }

  /// He-normal weights, zero biases.
  void initialize(std::uint64_t seed);

  /// Pre-activation of the output unit.
  double output(std::span<const double> x) const;
  /// sigmoid(output) for logistic heads, output otherwise.
  double predict(std::span<const double> x) const;

  /// Mean loss over the batch.
  double loss(std::span<const Sample> batch) const;
  /// Mean loss; writes d(loss)/d(parameters) into `grad` (resized).
  double loss_and_gradient(std::span<const Sample> batch, std::vector<double>& grad) const;

 private:
  struct LayerView {
    std::size_t in, out;
    std::size_t w_offset, b_offset;  // weights stored input-major: w[i * out + o]
  };

  void layout();
  double forward(std::span<const double> x, std::vector<std::vector<double>>* activations) const;

  std::size_t inputs_ = 0;
  std::vector<std::size_t> hidden_;
  Head head_ = Head::linear;
  std::vector<double> norm_mean_, norm_stddev_;
  std::vector<LayerView> layers_;
  std::vector<double> params_;
};

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam(std::size_t n_params, AdamOptions options = {});
  void step(std::vector<double>& params, const std::vector<double>& grad);

 private:
  AdamOptions opt_;
  std::vector<double> m_, v_;
  std::size_t t_ = 0;
};

struct TrainOptions {
  std::size_t epochs = 200;
  std::size_t batch_size = 32;
  AdamOptions adam;
  std::uint64_t seed = 0;
};

/// Mini-batch training with per-epoch shuffling. Returns the mean training
/// loss of every epoch, preceded by the loss before the first update.
std::vector<double> train(Mlp& net, std::span<const Sample> data, const TrainOptions& options);

}  // namespace bugflow::nn
