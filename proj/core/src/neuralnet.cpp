#include "romnn/neuralnet.hpp"

#include "romnn/archive.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>

namespace romnn::nn {
namespace {

void apply_hidden(Activation act, Matrix& z) {
  if (act == Activation::relu) z = z.cwiseMax(0.0);
}

// Forward pass that keeps every layer's activations for backpropagation.
// activations[0] is the input; activations[L] the (linear) output.
std::vector<Matrix> forward_trace(const NetworkModel& model, const Matrix& inputs, const Dropout& dropout) {
  const Index layers = model.layer_count();
  std::vector<Matrix> acts(static_cast<std::size_t>(layers) + 1);
  acts[0] = inputs;
  const bool drop = dropout.rate > 0.0 && dropout.rng != nullptr;
  const double keep_scale = drop ? 1.0 / (1.0 - dropout.rate) : 1.0;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (Index l = 0; l < layers; ++l) {
    Matrix z = model.weight(l) * acts[static_cast<std::size_t>(l)];
    z.colwise() += model.bias(l);
    if (l + 1 < layers) {
      apply_hidden(model.hidden_activation(), z);
      if (drop) {
        for (Index k = 0; k < z.size(); ++k) {
          z.data()[k] = uniform(*dropout.rng) < dropout.rate ? 0.0 : z.data()[k] * keep_scale;
        }
      }
    }
    acts[static_cast<std::size_t>(l) + 1] = std::move(z);
  }
  return acts;
}

}  // namespace

Standardization Standardization::fit(const Matrix& samples) {
  Standardization s;
  const double n = static_cast<double>(samples.cols());
  s.mean = samples.rowwise().mean();
  const Matrix centered = samples.colwise() - s.mean;
  s.stddev = (centered.array().square().rowwise().sum() / n).sqrt().matrix();
  s.stddev = s.stddev.cwiseMax(kFloor);
  return s;
}

Standardization Standardization::identity(Index features) {
  return {Vector::Zero(features), Vector::Ones(features)};
}

Vector Standardization::apply(const Vector& x) const { return (x - mean).cwiseQuotient(stddev); }

Matrix Standardization::apply(const Matrix& x) const {
  return (x.colwise() - mean).array().colwise() / stddev.array();
}

Vector Standardization::invert(const Vector& z) const { return z.cwiseProduct(stddev) + mean; }

Matrix Standardization::invert(const Matrix& z) const {
  return (z.array().colwise() * stddev.array()).matrix().colwise() + mean;
}

Index parameter_count(const std::vector<Index>& widths) {
  Index total = 0;
  for (std::size_t l = 1; l < widths.size(); ++l) total += widths[l] * (widths[l - 1] + 1);
  return total;
}

NetworkModel::NetworkModel(std::vector<Index> widths, Activation hidden)
    : widths_(std::move(widths)), hidden_(hidden) {
  if (widths_.size() < 2) throw std::invalid_argument("NetworkModel: need at least input and output widths");
  for (Index w : widths_) {
    if (w < 1) throw std::invalid_argument("NetworkModel: layer widths must be positive");
  }
  offsets_.push_back(0);
  for (std::size_t l = 1; l < widths_.size(); ++l) {
    offsets_.push_back(offsets_.back() + widths_[l] * (widths_[l - 1] + 1));
  }
  parameters_ = Vector::Zero(offsets_.back());
  input_stats = Standardization::identity(widths_.front());
  output_stats = Standardization::identity(widths_.back());
}

NetworkModel NetworkModel::initialize(std::vector<Index> widths, std::uint64_t seed, Activation hidden) {
  NetworkModel model(std::move(widths), hidden);
  std::mt19937_64 rng(seed);
  for (Index l = 0; l < model.layer_count(); ++l) {
    const auto fan_in = static_cast<double>(model.widths_[static_cast<std::size_t>(l)]);
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / fan_in));
    auto w = model.weight(l);
    for (Index k = 0; k < w.size(); ++k) w.data()[k] = normal(rng);
  }
  return model;
}

Eigen::Map<Matrix> NetworkModel::weight(Index layer) {
  const auto l = static_cast<std::size_t>(layer);
  return {parameters_.data() + offsets_[l], widths_[l + 1], widths_[l]};
}

Eigen::Map<const Matrix> NetworkModel::weight(Index layer) const {
  const auto l = static_cast<std::size_t>(layer);
  return {parameters_.data() + offsets_[l], widths_[l + 1], widths_[l]};
}

Eigen::Map<Vector> NetworkModel::bias(Index layer) {
  const auto l = static_cast<std::size_t>(layer);
  return {parameters_.data() + offsets_[l] + widths_[l + 1] * widths_[l], widths_[l + 1]};
}

Eigen::Map<const Vector> NetworkModel::bias(Index layer) const {
  const auto l = static_cast<std::size_t>(layer);
  return {parameters_.data() + offsets_[l] + widths_[l + 1] * widths_[l], widths_[l + 1]};
}

Matrix NetworkModel::forward_standardized(const Matrix& inputs) const {
  Matrix a = inputs;
  for (Index l = 0; l < layer_count(); ++l) {
    Matrix z = weight(l) * a;
    z.colwise() += bias(l);
    if (l + 1 < layer_count()) apply_hidden(hidden_, z);
    a = std::move(z);
  }
  return a;
}

Matrix NetworkModel::forward(const Matrix& raw_inputs) const {
  if (raw_inputs.rows() != input_size()) throw std::invalid_argument("forward: input width mismatch");
  return output_stats.invert(forward_standardized(input_stats.apply(raw_inputs)));
}

Vector NetworkModel::forward(const Vector& raw_input) const {
  return forward(Matrix(raw_input)).col(0);
}

Matrix NetworkModel::jacobian_wrt_input(const Vector& raw_input) const {
  if (raw_input.size() != input_size()) throw std::invalid_argument("jacobian_wrt_input: input width mismatch");
  const auto acts = forward_trace(*this, Matrix(input_stats.apply(raw_input)), Dropout{});
  // Reverse sweep: grad starts as d(raw out)/d(std out) = diag(output stddev).
  Matrix grad = output_stats.stddev.asDiagonal() * weight(layer_count() - 1);
  for (Index l = layer_count() - 2; l >= 0; --l) {
    if (hidden_ == Activation::relu) {
      const auto& a = acts[static_cast<std::size_t>(l) + 1];
      for (Index j = 0; j < grad.cols(); ++j) {
        if (!(a(j, 0) > 0.0)) grad.col(j).setZero();
      }
    }
    grad = grad * weight(l);
  }
  return grad * input_stats.stddev.cwiseInverse().asDiagonal();
}

void NetworkModel::save(const std::filesystem::path& path) const {
  Archive ar;
  ar.put("widths", std::vector<std::int64_t>(widths_.begin(), widths_.end()));
  ar.put("hidden_activation", std::vector<std::int64_t>{hidden_ == Activation::relu ? 0 : 1});
  ar.put("parameters", parameters_);
  ar.put("input_mean", input_stats.mean);
  ar.put("input_stddev", input_stats.stddev);
  ar.put("output_mean", output_stats.mean);
  ar.put("output_stddev", output_stats.stddev);
  ar.save(path);
}

NetworkModel NetworkModel::load(const std::filesystem::path& path) {
  const Archive ar = Archive::load(path);
  const auto& w = ar.integers("widths");
  const auto act = ar.integers("hidden_activation").at(0) == 0 ? Activation::relu : Activation::identity;
  NetworkModel model(std::vector<Index>(w.begin(), w.end()), act);
  Vector params = ar.vector("parameters");
  if (params.size() != model.parameter_count()) throw std::runtime_error("network file: parameter count mismatch");
  model.parameters_ = std::move(params);
  model.input_stats = {ar.vector("input_mean"), ar.vector("input_stddev")};
  model.output_stats = {ar.vector("output_mean"), ar.vector("output_stddev")};
  return model;
}

LossGradient standardized_loss_and_gradient(const NetworkModel& model, const Matrix& inputs,
                                            const Matrix& targets, Dropout dropout) {
  if (inputs.cols() == 0 || inputs.cols() != targets.cols()) {
    throw std::invalid_argument("loss_and_gradient: empty or mismatched batch");
  }
  const auto acts = forward_trace(model, inputs, dropout);
  const Index layers = model.layer_count();
  const bool drop = dropout.rate > 0.0 && dropout.rng != nullptr;
  const double keep_scale = drop ? 1.0 / (1.0 - dropout.rate) : 1.0;

  LossGradient out;
  out.gradient = Vector::Zero(model.parameter_count());
  Matrix delta = acts.back() - targets;
  out.loss = 0.5 * delta.squaredNorm();

  for (Index l = layers - 1; l >= 0; --l) {
    const Matrix& prev = acts[static_cast<std::size_t>(l)];
    const auto base = static_cast<Index>(model.weight(l).data() - model.parameters().data());
    Eigen::Map<Matrix>(out.gradient.data() + base, delta.rows(), prev.rows()).noalias() =
        delta * prev.transpose();
    Eigen::Map<Vector>(out.gradient.data() + base + delta.rows() * prev.rows(), delta.rows()) =
        delta.rowwise().sum();
    if (l == 0) break;
    Matrix back = model.weight(l).transpose() * delta;
    if (model.hidden_activation() == Activation::relu || drop) {
      // d(activation)/dz is keep_scale where the (masked) activation is
      // positive and 0 elsewhere; identity layers with dropout keep the mask.
      for (Index k = 0; k < back.size(); ++k) {
        const double a = prev.data()[k];
        if (model.hidden_activation() == Activation::relu) {
          back.data()[k] = a > 0.0 ? back.data()[k] * keep_scale : 0.0;
        } else if (drop) {
          back.data()[k] = a != 0.0 ? back.data()[k] * keep_scale : 0.0;
        }
      }
    }
    delta = std::move(back);
  }
  return out;
}

LossGradient loss_and_gradient(const NetworkModel& model, const Matrix& inputs, const Matrix& targets,
                               Dropout dropout) {
  return standardized_loss_and_gradient(model, model.input_stats.apply(inputs), model.output_stats.apply(targets),
                                        dropout);
}

void adam_step(AdamState& state, const AdamConfig& config, Vector& params, const Vector& gradient) {
  if (params.size() != gradient.size() || state.first_moment.size() != params.size()) {
    throw std::invalid_argument("adam_step: shape mismatch");
  }
  ++state.step;
  state.first_moment = config.beta1 * state.first_moment + (1.0 - config.beta1) * gradient;
  state.second_moment =
      config.beta2 * state.second_moment + (1.0 - config.beta2) * gradient.cwiseProduct(gradient);
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  params.array() -= config.learning_rate * (state.first_moment.array() / c1) /
                    ((state.second_moment.array() / c2).sqrt() + config.epsilon);
}

namespace {

double mean_loss(const NetworkModel& model, const Matrix& inputs, const Matrix& targets) {
  if (inputs.cols() == 0) return 0.0;
  const Matrix pred = model.forward_standardized(inputs);
  return 0.5 * (pred - targets).squaredNorm() / static_cast<double>(inputs.cols());
}

Matrix gather_columns(const Matrix& m, const std::vector<Index>& cols, std::size_t begin, std::size_t end) {
  Matrix out(m.rows(), static_cast<Index>(end - begin));
  for (std::size_t c = begin; c < end; ++c) out.col(static_cast<Index>(c - begin)) = m.col(cols[c]);
  return out;
}

}  // namespace

FitResult fit(const Matrix& inputs, const Matrix& targets, const std::vector<Index>& hidden_widths,
              const TrainingConfig& config) {
  const Index n = inputs.cols();
  if (targets.cols() != n) throw std::invalid_argument("fit: inputs and targets differ in sample count");
  if (n < 10) throw std::invalid_argument("fit: need at least 10 samples");
  if (!(config.validation_fraction > 0.0 && config.validation_fraction < 1.0)) {
    throw std::invalid_argument("fit: validation fraction must lie in (0, 1)");
  }
  if (!(config.dropout >= 0.0 && config.dropout < 1.0) || config.batch_size < 1 || config.patience < 1) {
    throw std::invalid_argument("fit: invalid training configuration");
  }

  std::mt19937_64 rng(config.seed);
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_val = std::clamp<Index>(
      static_cast<Index>(std::ceil(config.validation_fraction * static_cast<double>(n))), 1, n - 1);
  const auto n_train = static_cast<std::size_t>(n - n_val);
  std::vector<Index> train_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<Index> val_idx(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());

  const Matrix train_in_raw = gather_columns(inputs, train_idx, 0, train_idx.size());
  const Matrix train_out_raw = gather_columns(targets, train_idx, 0, train_idx.size());

  std::vector<Index> widths{inputs.rows()};
  widths.insert(widths.end(), hidden_widths.begin(), hidden_widths.end());
  widths.push_back(targets.rows());
  NetworkModel model = NetworkModel::initialize(widths, rng(), config.hidden_activation);
  model.input_stats = Standardization::fit(train_in_raw);
  model.output_stats = Standardization::fit(train_out_raw);

  const Matrix train_in = model.input_stats.apply(train_in_raw);
  const Matrix train_out = model.output_stats.apply(train_out_raw);
  const Matrix val_in = model.input_stats.apply(gather_columns(inputs, val_idx, 0, val_idx.size()));
  const Matrix val_out = model.output_stats.apply(gather_columns(targets, val_idx, 0, val_idx.size()));

  FitResult result{model, {}, 0, mean_loss(model, val_in, val_out)};
  result.log.push_back({0, mean_loss(model, train_in, train_out), result.best_validation_loss});

  AdamState adam(model.parameter_count());
  std::vector<Index> perm(n_train);
  std::iota(perm.begin(), perm.end(), 0);
  const Dropout dropout{config.dropout, &rng};
  Index since_best = 0;

  for (Index epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(perm.begin(), perm.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n_train; start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop = std::min(n_train, start + static_cast<std::size_t>(config.batch_size));
      const Matrix batch_in = gather_columns(train_in, perm, start, stop);
      const Matrix batch_out = gather_columns(train_out, perm, start, stop);
      const LossGradient lg = standardized_loss_and_gradient(model, batch_in, batch_out, dropout);
      if (!std::isfinite(lg.loss) || !lg.gradient.allFinite()) {
        throw std::runtime_error("fit: non-finite loss at epoch " + std::to_string(epoch) +
                                 " (batch starting at " + std::to_string(start) + ")");
      }
      epoch_loss += lg.loss;
      adam_step(adam, config.adam, model.parameters(), lg.gradient);
    }
    const double val_loss = mean_loss(model, val_in, val_out);
    if (!std::isfinite(val_loss)) {
      throw std::runtime_error("fit: non-finite validation loss at epoch " + std::to_string(epoch));
    }
    result.log.push_back({epoch, epoch_loss / static_cast<double>(n_train), val_loss});
    if (val_loss < result.best_validation_loss) {
      result.best_validation_loss = val_loss;
      result.best_epoch = epoch;
      result.model.parameters() = model.parameters();
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  return result;
}

void write_training_log(const std::filesystem::path& path, const std::vector<EpochRecord>& log) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write training log " + path.string());
  os << "epoch,train_loss,val_loss\n" << std::setprecision(17);
  for (const auto& r : log) os << r.epoch << ',' << r.train_loss << ',' << r.validation_loss << '\n';
}

}  // namespace romnn::nn
