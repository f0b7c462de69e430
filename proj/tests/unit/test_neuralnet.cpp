#include "romnn/neuralnet.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

namespace romnn::nn {
namespace {

using testing::Sampler;

NetworkModel random_model(Sampler& s, std::vector<Index> widths, Activation act = Activation::relu) {
  NetworkModel m(std::move(widths), act);
  m.parameters() = s.vector(m.parameter_count(), -1, 1);
  m.input_stats = Standardization::fit(s.matrix(m.input_size(), 30, -2, 3));
  m.output_stats = Standardization::fit(s.matrix(m.output_size(), 30, -5, 1));
  return m;
}

TEST(NetworkModel, ParameterCount) {
  EXPECT_EQ(parameter_count({3, 4, 2}), 4 * 4 + 2 * 5);
  EXPECT_EQ(parameter_count({12, 80, 120, 240, 480, 240, 120, 80, 8}),
            80 * 13 + 120 * 81 + 240 * 121 + 480 * 241 + 240 * 481 + 120 * 241 + 80 * 121 + 8 * 81);
  EXPECT_EQ(NetworkModel({5, 7, 3}).parameter_count(), parameter_count({5, 7, 3}));
  EXPECT_THROW(NetworkModel({4}), std::invalid_argument);
  EXPECT_THROW(NetworkModel({4, 0, 2}), std::invalid_argument);
}

TEST(NetworkModel, ParameterLayout) {
  NetworkModel m({2, 3, 1});
  for (Index i = 0; i < m.parameter_count(); ++i) m.parameters()[i] = static_cast<double>(i);
  EXPECT_EQ(m.weight(0)(0, 0), 0.0);
  EXPECT_EQ(m.weight(0)(1, 0), 1.0);
  EXPECT_EQ(m.weight(0)(0, 1), 3.0);
  EXPECT_EQ(m.bias(0)(2), 8.0);
  EXPECT_EQ(m.weight(1)(0, 2), 11.0);
  EXPECT_EQ(m.bias(1)(0), 12.0);
}

TEST(NetworkModel, InitializationIsDeterministicAndHeScaled) {
  const auto a = NetworkModel::initialize({50, 400, 3}, 9);
  const auto b = NetworkModel::initialize({50, 400, 3}, 9);
  const auto c = NetworkModel::initialize({50, 400, 3}, 10);
  EXPECT_EQ(a.parameters(), b.parameters());
  EXPECT_NE(a.parameters(), c.parameters());
  EXPECT_TRUE(a.bias(0).isZero(0.0));
  const auto w = a.weight(0);
  const double var = w.squaredNorm() / static_cast<double>(w.size());
  EXPECT_NEAR(var, 2.0 / 50.0, 0.1 * 2.0 / 50.0);
}

TEST(NetworkModel, ZeroParametersReturnOutputMean) {
  Sampler s(71);
  NetworkModel m = random_model(s, {4, 6, 6, 3});
  m.parameters().setZero();
  for (int trial = 0; trial < 5; ++trial) {
    EXPECT_EQ(m.forward(s.vector(4, -10, 10)), m.output_stats.mean);
  }
}

TEST(NetworkModel, HandComputedForwardPass) {
  NetworkModel m({2, 2, 1});
  m.input_stats = Standardization::identity(2);
  m.output_stats = Standardization::identity(1);
  m.weight(0) << 1.0, -1.0, 2.0, 0.5;
  m.bias(0) << 0.5, -1.0;
  m.weight(1) << 1.0, -2.0;
  m.bias(1) << 0.25;
  EXPECT_DOUBLE_EQ(m.forward(Vector((Vector(2) << 1.0, 2.0).finished()))[0], -3.75);
  EXPECT_DOUBLE_EQ(m.forward(Vector((Vector(2) << -1.0, 0.0).finished()))[0], 0.25 + 0.0 - 2.0 * 0.0);

  m.output_stats.mean << 1.0;
  m.output_stats.stddev << 3.0;
  m.input_stats.mean << 1.0, 0.0;
  m.input_stats.stddev << 2.0, 1.0;
  // Standardized input (1, 2) from raw (3, 2).
  EXPECT_DOUBLE_EQ(m.forward(Vector((Vector(2) << 3.0, 2.0).finished()))[0], 1.0 + 3.0 * -3.75);
}

TEST(NetworkModel, BiasFreeReluNetworkIsPositivelyHomogeneous) {
  Sampler s(72);
  NetworkModel m = random_model(s, {5, 9, 9, 4});
  m.input_stats = Standardization::identity(5);
  m.output_stats = Standardization::identity(4);
  for (Index l = 0; l < m.layer_count(); ++l) m.bias(l).setZero();
  for (int trial = 0; trial < 10; ++trial) {
    const Vector x = s.vector(5, -1, 1);
    const double alpha = s.uniform(0.1, 10.0);
    EXPECT_LT((m.forward(Vector(alpha * x)) - alpha * m.forward(x)).norm(), 1e-12 * alpha * (1 + m.forward(x).norm()));
  }
}

TEST(NetworkModel, BatchForwardMatchesColumns) {
  Sampler s(73);
  const NetworkModel m = random_model(s, {3, 8, 2});
  const Matrix x = s.matrix(3, 7, -1, 1);
  const Matrix y = m.forward(x);
  for (Index j = 0; j < 7; ++j) EXPECT_LT((y.col(j) - m.forward(Vector(x.col(j)))).norm(), 1e-14);
}

TEST(NetworkModel, LinearNetworkJacobianIsWeightProduct) {
  Sampler s(74);
  const NetworkModel m = random_model(s, {4, 6, 5, 3}, Activation::identity);
  const Matrix expected = m.output_stats.stddev.asDiagonal() * Matrix(m.weight(2)) * Matrix(m.weight(1)) *
                          Matrix(m.weight(0)) * m.input_stats.stddev.cwiseInverse().asDiagonal();
  for (int trial = 0; trial < 3; ++trial) {
    EXPECT_LT((m.jacobian_wrt_input(s.vector(4, -5, 5)) - expected).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(NetworkModel, InputJacobianMatchesFiniteDifferences) {
  Sampler s(75);
  const NetworkModel m = random_model(s, {6, 20, 20, 4});
  for (int trial = 0; trial < 10; ++trial) {
    const Vector x = s.vector(6, -1, 2);
    const Matrix fd = testing::fd_jacobian([&](const Vector& v) { return m.forward(v); }, x, 1e-7);
    EXPECT_LE(testing::relative_max_error(m.jacobian_wrt_input(x), fd), 1e-6);
  }
}

TEST(NetworkModel, SaveLoadRoundTripIsExact) {
  Sampler s(76);
  const NetworkModel m = random_model(s, {3, 7, 7, 2});
  const auto path = std::filesystem::temp_directory_path() / "romnn_nn_roundtrip.bin";
  m.save(path);
  const NetworkModel back = NetworkModel::load(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back.widths(), m.widths());
  EXPECT_EQ(back.parameters(), m.parameters());
  const Vector x = s.vector(3, -1, 1);
  EXPECT_EQ(back.forward(x), m.forward(x));
}

TEST(Standardization, RoundTripAndMoments) {
  Sampler s(77);
  const Matrix x = s.matrix(5, 40, -3, 8);
  const auto st = Standardization::fit(x);
  const Matrix z = st.apply(x);
  EXPECT_LT(z.rowwise().mean().norm(), 1e-13);
  for (Index r = 0; r < 5; ++r) {
    EXPECT_NEAR((z.row(r).array().square().sum()) / 40.0, 1.0, 1e-12);
  }
  EXPECT_LT((st.invert(z) - x).cwiseAbs().maxCoeff(), 1e-13);

  Matrix constant = Matrix::Constant(2, 10, 4.5);
  const auto flat = Standardization::fit(constant);
  EXPECT_EQ(flat.stddev[0], Standardization::kFloor);
  EXPECT_TRUE(flat.apply(constant).isZero(0.0));

  const auto id = Standardization::identity(3);
  const Vector v = s.vector(3, -1, 1);
  EXPECT_EQ(id.apply(v), v);
}

// Central differences of the loss over every parameter.
Vector fd_parameter_gradient(const NetworkModel& model, const Matrix& x, const Matrix& y,
                             const std::mt19937_64* rng, double rate) {
  NetworkModel probe = model;
  Vector g(model.parameter_count());
  auto loss = [&](const NetworkModel& m) {
    std::mt19937_64 copy = rng ? *rng : std::mt19937_64{};
    return standardized_loss_and_gradient(m, x, y, Dropout{rate, rng ? &copy : nullptr}).loss;
  };
  for (Index i = 0; i < g.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(model.parameters()[i]));
    probe.parameters()[i] = model.parameters()[i] + h;
    const double lp = loss(probe);
    probe.parameters()[i] = model.parameters()[i] - h;
    const double lm = loss(probe);
    probe.parameters()[i] = model.parameters()[i];
    g[i] = (lp - lm) / (2.0 * h);
  }
  return g;
}

class GradientDepth : public ::testing::TestWithParam<int> {};

TEST_P(GradientDepth, MatchesFiniteDifferences) {
  Sampler s(78 + static_cast<std::uint64_t>(GetParam()));
  std::vector<Index> widths{4};
  for (int l = 1; l < GetParam(); ++l) widths.push_back(s.integer(3, 6));
  widths.push_back(3);
  NetworkModel m(widths);
  m.parameters() = s.vector(m.parameter_count(), -0.8, 0.8);
  const Matrix x = s.matrix(4, 5, -1, 1);
  const Matrix y = s.matrix(3, 5, -1, 1);
  const Vector g = standardized_loss_and_gradient(m, x, y).gradient;
  EXPECT_LE(testing::relative_max_error(g, fd_parameter_gradient(m, x, y, nullptr, 0.0)), 1e-6);

  std::mt19937_64 rng(5);
  std::mt19937_64 copy = rng;
  const Vector gd = standardized_loss_and_gradient(m, x, y, Dropout{0.3, &copy}).gradient;
  EXPECT_LE(testing::relative_max_error(gd, fd_parameter_gradient(m, x, y, &rng, 0.3)), 1e-6);
}

INSTANTIATE_TEST_SUITE_P(Layers, GradientDepth, ::testing::Values(2, 5, 7));

TEST(Loss, RawLossMatchesStandardizedDefinition) {
  Sampler s(80);
  const NetworkModel m = random_model(s, {3, 6, 2});
  const Matrix x = s.matrix(3, 8, -1, 1);
  const Matrix y = s.matrix(2, 8, -4, 2);
  const Matrix pred = m.forward(x);
  const double expected = 0.5 * (m.output_stats.apply(pred) - m.output_stats.apply(y)).squaredNorm();
  EXPECT_NEAR(loss_and_gradient(m, x, y).loss, expected, 1e-12 * expected);
}

TEST(Loss, DuplicatedBatchDoublesLossAndGradient) {
  Sampler s(81);
  const NetworkModel m = random_model(s, {3, 6, 2});
  const Matrix x = s.matrix(3, 4, -1, 1);
  const Matrix y = s.matrix(2, 4, -1, 1);
  Matrix x2(3, 8), y2(2, 8);
  x2 << x, x;
  y2 << y, y;
  const auto one = loss_and_gradient(m, x, y);
  const auto two = loss_and_gradient(m, x2, y2);
  EXPECT_NEAR(two.loss, 2.0 * one.loss, 1e-12 * one.loss);
  EXPECT_LT((two.gradient - 2.0 * one.gradient).norm(), 1e-12 * one.gradient.norm());
}

TEST(Loss, OwnPredictionsGiveZero) {
  Sampler s(82);
  const NetworkModel m = random_model(s, {3, 6, 2});
  const Matrix x = s.matrix(3, 6, -1, 1);
  const auto r = loss_and_gradient(m, x, m.forward(x));
  EXPECT_LT(r.loss, 1e-24);
  EXPECT_LT(r.gradient.norm(), 1e-10);
  EXPECT_THROW(loss_and_gradient(m, x, Matrix(2, 5)), std::invalid_argument);
}

TEST(Adam, FirstTwoStepsByHand) {
  const AdamConfig cfg{0.01, 0.9, 0.999, 1e-8};
  Vector p = (Vector(3) << 1.0, -2.0, 0.5).finished();
  const Vector g1 = (Vector(3) << 0.3, -4.0, 0.0).finished();
  const Vector g2 = (Vector(3) << -0.1, 1.0, 2.0).finished();
  AdamState st(3);
  adam_step(st, cfg, p, g1);
  EXPECT_EQ(st.step, 1);
  const double e1[3] = {1.0 - 0.01 * 0.3 / (0.3 + 1e-8), -2.0 + 0.01 * 4.0 / (4.0 + 1e-8), 0.5};
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(p[i], e1[i], 1e-12);

  adam_step(st, cfg, p, g2);
  for (int i = 0; i < 3; ++i) {
    const double m = 0.9 * 0.1 * g1[i] + 0.1 * g2[i];
    const double v = 0.999 * 0.001 * g1[i] * g1[i] + 0.001 * g2[i] * g2[i];
    const double mhat = m / (1.0 - 0.81), vhat = v / (1.0 - 0.999 * 0.999);
    EXPECT_NEAR(p[i], e1[i] - 0.01 * mhat / (std::sqrt(vhat) + 1e-8), 1e-12);
  }
  EXPECT_THROW(adam_step(st, cfg, p, Vector(2)), std::invalid_argument);
}

TrainingConfig quick_config(std::uint64_t seed) {
  TrainingConfig c;
  c.max_epochs = 600;
  c.patience = 100;
  c.dropout = 0.0;
  c.batch_size = 32;
  c.seed = seed;
  return c;
}

TEST(Fit, LearnsAnAffineMap) {
  Sampler s(83);
  const Matrix a = s.matrix(2, 3, -1, 1);
  const Vector b = s.vector(2, -1, 1);
  const Matrix x = s.matrix(3, 300, -1, 1);
  const Matrix y = (a * x).colwise() + b;
  TrainingConfig cfg = quick_config(1);
  cfg.hidden_activation = Activation::identity;
  const FitResult r = fit(x, y, {8}, cfg);
  const Matrix xt = s.matrix(3, 50, -1, 1);
  const Matrix yt = (a * xt).colwise() + b;
  EXPECT_LT((r.model.forward(xt) - yt).norm() / yt.norm(), 1e-2);
}

TEST(Fit, ConstantTargetsAreReproduced) {
  Sampler s(84);
  const Matrix x = s.matrix(2, 40, -1, 1);
  const Matrix y = Matrix::Constant(1, 40, 3.25);
  TrainingConfig cfg = quick_config(2);
  cfg.max_epochs = 20;
  const FitResult r = fit(x, y, {4}, cfg);
  EXPECT_NEAR(r.model.forward(Vector(s.vector(2, -1, 1)))[0], 3.25, 1e-9);
}

TEST(Fit, EarlyStoppingInvariantsAndDeterminism) {
  Sampler s(85);
  const Matrix x = s.matrix(2, 60, -1, 1);
  Matrix y(1, 60);
  for (Index j = 0; j < 60; ++j) y(0, j) = std::sin(3 * x(0, j)) * x(1, j) + 0.3 * s.uniform(-1, 1);
  TrainingConfig cfg = quick_config(3);
  cfg.patience = 15;
  cfg.dropout = 0.1;
  const FitResult r = fit(x, y, {16, 16}, cfg);
  ASSERT_FALSE(r.log.empty());
  EXPECT_EQ(r.log.front().epoch, 0);
  for (std::size_t i = 0; i < r.log.size(); ++i) EXPECT_EQ(r.log[i].epoch, static_cast<Index>(i));
  const auto best = std::min_element(r.log.begin(), r.log.end(), [](const EpochRecord& p, const EpochRecord& q) {
    return p.validation_loss < q.validation_loss;
  });
  EXPECT_EQ(best->epoch, r.best_epoch);
  EXPECT_EQ(best->validation_loss, r.best_validation_loss);
  EXPECT_LE(static_cast<Index>(r.log.size()), std::min(r.best_epoch + cfg.patience + 1, cfg.max_epochs + 1));

  const FitResult again = fit(x, y, {16, 16}, cfg);
  EXPECT_EQ(again.model.parameters(), r.model.parameters());
  EXPECT_EQ(again.best_epoch, r.best_epoch);
}

TEST(Fit, RejectsInvalidSetups) {
  const Matrix x = Matrix::Random(2, 20);
  const Matrix y = Matrix::Random(1, 20);
  TrainingConfig cfg = quick_config(0);
  EXPECT_THROW(fit(x.leftCols(9), y.leftCols(9), {4}, cfg), std::invalid_argument);
  EXPECT_THROW(fit(x, y.leftCols(19), {4}, cfg), std::invalid_argument);
  cfg.validation_fraction = 1.0;
  EXPECT_THROW(fit(x, y, {4}, cfg), std::invalid_argument);
  cfg = quick_config(0);
  cfg.dropout = 1.0;
  EXPECT_THROW(fit(x, y, {4}, cfg), std::invalid_argument);
}

TEST(Fit, NonFiniteLossIsReported) {
  const Matrix x = Matrix::Random(2, 20);
  Matrix y = Matrix::Random(1, 20);
  TrainingConfig cfg = quick_config(0);
  cfg.adam.learning_rate = 1e200;
  cfg.max_epochs = 50;
  EXPECT_THROW(fit(x, y, {4}, cfg), std::runtime_error);
}

TEST(TrainingLog, CsvLayout) {
  const auto path = std::filesystem::temp_directory_path() / "romnn_training_log.csv";
  write_training_log(path, {{0, 1.5, 2.5}, {1, 0.25, 0.1}});
  std::ifstream in(path);
  std::string header, first, second;
  std::getline(in, header);
  std::getline(in, first);
  std::getline(in, second);
  std::filesystem::remove(path);
  EXPECT_EQ(header, "epoch,train_loss,val_loss");
  EXPECT_EQ(first, "0,1.5,2.5");
  EXPECT_EQ(second, "1,0.25,0.10000000000000001");
}

}  // namespace
}  // namespace romnn::nn
