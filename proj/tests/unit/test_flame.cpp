#include "romnn/flame.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace romnn {
namespace {

Vector mid_box() { return (Vector(2) << 0.5 * (2.3375e12 + 6.2e12), 0.5 * (5625.5 + 9000.0)).finished(); }

FlameConfig small_grid() {
  FlameConfig c;
  c.nx = 9;
  c.ny = 7;
  return c;
}

Vector random_state(const FlameSystem& sys, testing::Sampler& s) {
  Vector u(sys.dim());
  for (Index k = 0; k < sys.config().unknown_nodes(); ++k) {
    u[4 * k + 0] = s.uniform(0.0, 0.05);
    u[4 * k + 1] = s.uniform(0.0, 0.3);
    u[4 * k + 2] = s.uniform(0.0, 0.3);
    u[4 * k + 3] = s.uniform(300.0, 2500.0);
  }
  return u;
}

TEST(FlameAssembly, DefaultGridHas2736Unknowns) {
  const auto sys = assemble_flame({});
  EXPECT_EQ(sys->dim(), 2736);
  EXPECT_EQ(sys->param_dim(), 2);
  EXPECT_TRUE(sys->mass().is_sparse());
  EXPECT_LT((sys->mass().to_dense() - Matrix::Identity(2736, 2736)).cwiseAbs().maxCoeff(), 0.0 + 1e-300);
  for (Index k = 0; k < 684; ++k) {
    EXPECT_EQ(sys->initial_state().segment(4 * k, 4), (Vector(4) << 0, 0, 0, 300).finished());
  }
}

TEST(FlameAssembly, RejectsTinyGrids) {
  FlameConfig c;
  c.nx = 3;
  EXPECT_THROW(assemble_flame(c), std::invalid_argument);
  c = FlameConfig{};
  c.inlet_extent = {0.5, 1.2};
  EXPECT_THROW(assemble_flame(c), std::invalid_argument);
}

TEST(FlameAssembly, DofLayoutIsNodeMajor) {
  const auto sys = assemble_flame({});
  EXPECT_EQ(sys->dof(1, 1, 0), 0);
  EXPECT_EQ(sys->dof(1, 1, 3), 3);
  EXPECT_EQ(sys->dof(2, 1, 0), 4);
  EXPECT_EQ(sys->dof(1, 2, 0), 4 * 38);
  EXPECT_EQ(sys->dof(38, 18, 3), 2735);
}

TEST(Arrhenius, ZeroFuelOrOxidizerGivesZeroSource) {
  const FlameConfig c;
  for (const FlameState& s : {FlameState{0.0, 0.2, 0.1, 1500.0}, FlameState{0.03, 0.0, 0.1, 1500.0}}) {
    const FlameState r = arrhenius_source(c, s, mid_box());
    for (double v : r) EXPECT_EQ(v, 0.0);
  }
}

TEST(Arrhenius, LinearInPreExponentialFactor) {
  const FlameConfig c;
  const FlameState s{0.02, 0.1, 0.05, 1200.0};
  Vector mu = mid_box();
  const FlameState r1 = arrhenius_source(c, s, mu);
  mu[0] *= 2.0;
  const FlameState r2 = arrhenius_source(c, s, mu);
  for (std::size_t f = 0; f < 4; ++f) EXPECT_NEAR(r2[f], 2.0 * r1[f], 1e-14 * std::abs(r2[f]));
}

TEST(Arrhenius, TemperatureSourceIsHeatReleaseTimesProduct) {
  testing::Sampler s(31);
  const FlameConfig c;
  for (int trial = 0; trial < 50; ++trial) {
    const FlameState st{s.uniform(1e-4, 0.05), s.uniform(1e-4, 0.3), s.uniform(0, 0.3), s.uniform(300, 3000)};
    const FlameState r = arrhenius_source(c, st, s.point(c.param_box));
    ASSERT_NE(r[2], 0.0);
    EXPECT_NEAR(r[3] / r[2], 9800.0, 1e-9);
    EXPECT_GT(r[2], 0.0);
    EXPECT_LT(r[0], 0.0);
    EXPECT_LT(r[1], 0.0);
  }
}

TEST(Arrhenius, StoichiometricCoupling) {
  testing::Sampler s(32);
  const FlameConfig c;
  const double rho = c.density;
  const auto& w = c.molecular_weight;
  for (int trial = 0; trial < 50; ++trial) {
    const FlameState st{s.uniform(1e-4, 0.05), s.uniform(1e-4, 0.3), s.uniform(0, 0.3), s.uniform(300, 3000)};
    const FlameState r = arrhenius_source(c, st, s.point(c.param_box));
    const double a = r[0] / 2.0 * (rho / w[0]);
    const double b = r[1] / 1.0 * (rho / w[1]);
    const double p = -r[2] / 2.0 * (rho / w[2]);
    EXPECT_NEAR(a, b, 1e-12 * std::abs(a));
    EXPECT_NEAR(a, p, 1e-12 * std::abs(a));
  }
}

TEST(Arrhenius, ClosedFormTemperatureDerivative) {
  const FlameConfig c;
  const FlameState st{0.02, 0.02, 0.0, 900.0};
  const Vector mu = mid_box();
  const FlameState r = arrhenius_source(c, st, mu);
  const auto jac = arrhenius_jacobian(c, st, mu);
  const double expected = r[0] * mu[1] / (c.gas_constant * 900.0 * 900.0);
  EXPECT_NEAR(jac[3], expected, 1e-12 * std::abs(expected));
}

TEST(Arrhenius, ClampsTemperature) {
  const FlameConfig c;
  const FlameState cold{0.02, 0.1, 0.0, -50.0};
  const FlameState r = arrhenius_source(c, cold, mid_box());
  for (double v : r) EXPECT_TRUE(std::isfinite(v));
  EXPECT_EQ(arrhenius_jacobian(c, cold, mid_box())[3], 0.0);
}

TEST(Arrhenius, JacobianMatchesFiniteDifferences) {
  testing::Sampler s(33);
  const FlameConfig c;
  for (int trial = 0; trial < 20; ++trial) {
    const Vector x = (Vector(4) << s.uniform(1e-3, 0.05), s.uniform(1e-3, 0.3), s.uniform(0, 0.3),
                      s.uniform(400, 3000)).finished();
    const Vector mu = s.point(c.param_box);
    auto f = [&](const Vector& v) {
      const FlameState r = arrhenius_source(c, {v[0], v[1], v[2], v[3]}, mu);
      return Vector(Eigen::Map<const Vector>(r.data(), 4));
    };
    const auto block = arrhenius_jacobian(c, {x[0], x[1], x[2], x[3]}, mu);
    const Matrix jac = Eigen::Map<const Eigen::Matrix<double, 4, 4, Eigen::RowMajor>>(block.data());
    EXPECT_LE(testing::relative_max_error(jac, testing::fd_jacobian(f, x, 1e-7)), 1e-5);
  }
}

TEST(FlameJacobian, MatchesFiniteDifferences) {
  testing::Sampler s(34);
  const auto sys = assemble_flame(small_grid());
  for (int trial = 0; trial < 3; ++trial) {
    const Vector u = random_state(*sys, s);
    const Vector mu = s.point(sys->param_box());
    const Matrix jac = sys->jacobian(u, 0.0, mu).to_dense();
    const Matrix fd = testing::fd_jacobian([&](const Vector& x) { return sys->velocity(x, 0.0, mu); }, u, 1e-7);
    EXPECT_LE(testing::relative_max_error(jac, fd), 1e-5);
  }
}

TEST(FlameVelocity, ConstantFieldIsStationaryAwayFromInflow) {
  const auto sys = assemble_flame({});
  const auto& c = sys->config();
  Vector u(sys->dim());
  for (Index k = 0; k < c.unknown_nodes(); ++k) u.segment(4 * k, 4) << 0.0, 0.2, 0.1, 700.0;
  const Vector f = sys->velocity(u, 0.0, mid_box());
  for (Index j = 1; j <= c.ny - 2; ++j) {
    for (Index i = 2; i <= c.nx - 2; ++i) {
      for (int fld = 0; fld < 4; ++fld) EXPECT_NEAR(f[sys->dof(i, j, fld)], 0.0, 1e-9);
    }
  }
}

TEST(FlameVelocity, AffineWithoutReaction) {
  testing::Sampler s(35);
  const auto sys = assemble_flame(small_grid());
  const Vector mu = (Vector(2) << 0.0, 7000.0).finished();
  for (int trial = 0; trial < 5; ++trial) {
    const Vector u = random_state(*sys, s);
    const double alpha = s.uniform(-2.0, 3.0);
    const Vector lhs = sys->velocity(alpha * u, 0.0, mu) - alpha * sys->velocity(u, 0.0, mu);
    const Vector rhs = (1.0 - alpha) * sys->boundary_load();
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-8 * std::max(1.0, rhs.cwiseAbs().maxCoeff()));
  }
}

TEST(FlameJacobian, FieldsDecoupleWithoutReaction) {
  testing::Sampler s(36);
  const auto sys = assemble_flame(small_grid());
  const Matrix jac = sys->jacobian(random_state(*sys, s), 0.0, (Vector(2) << 0.0, 7000.0).finished()).to_dense();
  for (Index r = 0; r < jac.rows(); ++r) {
    for (Index col = 0; col < jac.cols(); ++col) {
      if (r % 4 != col % 4) EXPECT_EQ(jac(r, col), 0.0);
    }
  }
}

TEST(FlameVelocity, CentralSchemeIsConfigurable) {
  FlameConfig c = small_grid();
  c.convection = ConvectionScheme::central;
  const auto central = assemble_flame(c);
  const auto upwind = assemble_flame(small_grid());
  EXPECT_GT((central->linear_operator() - upwind->linear_operator()).norm(), 0.0);
  testing::Sampler s(37);
  const Vector u = random_state(*central, s);
  const Vector mu = mid_box();
  const Matrix fd = testing::fd_jacobian([&](const Vector& x) { return central->velocity(x, 0.0, mu); }, u, 1e-7);
  EXPECT_LE(testing::relative_max_error(central->jacobian(u, 0.0, mu).to_dense(), fd), 1e-5);
}

TEST(FlameGrid, BoundaryValuesOnFullGrid) {
  const auto sys = assemble_flame({});
  const auto& c = sys->config();
  const Matrix theta = sys->field_on_grid(sys->initial_state(), 3);
  ASSERT_EQ(theta.rows(), c.nx);
  ASSERT_EQ(theta.cols(), c.ny);
  for (Index j = 0; j < c.ny; ++j) {
    const double y = static_cast<double>(j) * c.dy();
    const bool inlet = y >= 0.3 - 1e-12 && y <= 0.6 + 1e-12;
    EXPECT_EQ(theta(0, j), inlet ? 950.0 : 300.0) << "j = " << j;
  }
  EXPECT_EQ(theta(c.nx - 1, 5), 300.0);
}

TEST(FlameTrajectory, SpeciesAndTemperatureStayBounded) {
  const auto sys = assemble_flame({});
  const Trajectory traj = integrate(*sys, sys->config().time_grid(), mid_box());
  ASSERT_TRUE(traj.converged());
  double y_min = 0.0, y_max = 0.0, t_min = 1e300, t_max = 0.0;
  for (Index n = 0; n < traj.states.cols(); ++n) {
    for (Index k = 0; k < sys->config().unknown_nodes(); ++k) {
      for (int f = 0; f < 3; ++f) {
        y_min = std::min(y_min, traj.states(4 * k + f, n));
        y_max = std::max(y_max, traj.states(4 * k + f, n));
      }
      t_min = std::min(t_min, traj.states(4 * k + 3, n));
      t_max = std::max(t_max, traj.states(4 * k + 3, n));
    }
  }
  RecordProperty("theta_max", std::to_string(t_max));
  EXPECT_GE(y_min, -0.05);
  EXPECT_LE(y_max, 1.05);
  EXPECT_GE(t_min, 250.0);
  EXPECT_LE(t_max, 3000.0);
}

}  // namespace
}  // namespace romnn
