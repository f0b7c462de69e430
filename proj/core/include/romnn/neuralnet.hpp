#pragma once

#include "romnn/linalg.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

namespace romnn::nn {

enum class Activation { relu, identity };

/// Per-feature affine standardization  z = (x - mean) / stddev.
struct Standardization {
  static constexpr double kFloor = 1e-12;

  Vector mean;
  Vector stddev;

  /// Mean and population standard deviation over columns, stddev floored.
  static Standardization fit(const Matrix& samples);
  static Standardization identity(Index features);

  Index size() const { return mean.size(); }
  Vector apply(const Vector& x) const;
  Matrix apply(const Matrix& x) const;
  Vector invert(const Vector& z) const;
  Matrix invert(const Matrix& z) const;
};

/// Fully connected feed-forward network. Hidden layers use `hidden`
/// activation, the output layer is affine. Inputs and outputs are
/// standardized; the affine chain operates in standardized space.
///
/// Parameters live in one flat vector: for each layer, the weight matrix
/// (column-major, m_l x m_{l-1}) followed by its bias.
class NetworkModel {
 public:
  explicit NetworkModel(std::vector<Index> widths, Activation hidden = Activation::relu);

  /// He-scaled normal weights, zero biases, deterministic for a given seed.
  static NetworkModel initialize(std::vector<Index> widths, std::uint64_t seed,
                                 Activation hidden = Activation::relu);

  const std::vector<Index>& widths() const { return widths_; }
  Index input_size() const { return widths_.front(); }
  Index output_size() const { return widths_.back(); }
  Index layer_count() const { return static_cast<Index>(widths_.size()) - 1; }
  Index parameter_count() const { return parameters_.size(); }
  Activation hidden_activation() const { return hidden_; }

  Vector& parameters() { return parameters_; }
  const Vector& parameters() const { return parameters_; }
  Eigen::Map<Matrix> weight(Index layer);
  Eigen::Map<const Matrix> weight(Index layer) const;
  Eigen::Map<Vector> bias(Index layer);
  Eigen::Map<const Vector> bias(Index layer) const;

  Standardization input_stats;
  Standardization output_stats;

  /// Raw input -> raw output (dropout inactive).
  Vector forward(const Vector& raw_input) const;
  /// Column-wise batch version of forward().
  Matrix forward(const Matrix& raw_inputs) const;
  /// Affine chain only: standardized inputs -> standardized outputs.
  Matrix forward_standardized(const Matrix& inputs) const;

  /// d(raw output) / d(raw input), output_size x input_size, by reverse mode.
  Matrix jacobian_wrt_input(const Vector& raw_input) const;

  void save(const std::filesystem::path& path) const;
  static NetworkModel load(const std::filesystem::path& path);

 private:
  std::vector<Index> widths_;
  std::vector<Index> offsets_;
  Activation hidden_;
  Vector parameters_;
};

/// Number of parameters for a width chain: sum_l m_l (m_{l-1} + 1).
Index parameter_count(const std::vector<Index>& widths);

/// Inverted dropout on hidden activations; inactive when rate == 0.
struct Dropout {
  double rate = 0.0;
  std::mt19937_64* rng = nullptr;
};

struct LossGradient {
  double loss = 0.0;
  Vector gradient;
};

/// Half sum of squared errors over the batch, measured in standardized output
/// space, and its exact parameter gradient. Inputs and targets are raw,
/// one sample per column.
LossGradient loss_and_gradient(const NetworkModel& model, const Matrix& inputs, const Matrix& targets,
                               Dropout dropout = {});

/// Same as loss_and_gradient for data that is already standardized.
LossGradient standardized_loss_and_gradient(const NetworkModel& model, const Matrix& inputs,
                                            const Matrix& targets, Dropout dropout = {});

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  long step = 0;
  Vector first_moment;
  Vector second_moment;

  explicit AdamState(Index parameters)
      : first_moment(Vector::Zero(parameters)), second_moment(Vector::Zero(parameters)) {}
};

/// Bias-corrected Adam update applied in place to `params`.
void adam_step(AdamState& state, const AdamConfig& config, Vector& params, const Vector& gradient);

struct TrainingConfig {
  AdamConfig adam;
  Index batch_size = 64;
  Index max_epochs = 5000;
  double dropout = 0.1;
  Index patience = 100;
  double validation_fraction = 0.1;
  std::uint64_t seed = 0;
  Activation hidden_activation = Activation::relu;
};

struct EpochRecord {
  Index epoch = 0;
  double train_loss = 0.0;
  double validation_loss = 0.0;
};

struct FitResult {
  NetworkModel model;
  std::vector<EpochRecord> log;
  Index best_epoch = 0;
  double best_validation_loss = 0.0;
};

/// Minibatch Adam regression of targets on inputs (one sample per column).
/// Standardization statistics come from the training split only; the model
/// with the lowest validation loss is returned. Reported losses are per-sample
/// means of the standardized half squared error. Throws std::runtime_error on
/// a non-finite loss.
FitResult fit(const Matrix& inputs, const Matrix& targets, const std::vector<Index>& hidden_widths,
              const TrainingConfig& config);

void write_training_log(const std::filesystem::path& path, const std::vector<EpochRecord>& log);

}  // namespace romnn::nn
