#pragma once

#include "romnn/dynsys.hpp"

#include <memory>

namespace romnn {

/// 1D viscous Burgers'  u_t + u u_x = nu u_xx + g  on (0, 1) with
/// homogeneous Dirichlet data, nu = mu_1, g(x) = mu_2 exp(mu_3 x).
struct BurgersConfig {
  Index n_elements = 200;
  double horizon = 1.0;
  Index n_steps = 100;
  ParamBox param_box{{0.01, 2.0, 0.0}, {0.1, 3.0, 1.0}};

  Index dofs() const { return n_elements - 1; }
  double element_size() const { return 1.0 / static_cast<double>(n_elements); }
  TimeGrid time_grid() const { return TimeGrid::uniform(horizon, n_steps); }
};

double burgers_source(double x, const Vector& mu);

/// Linear finite elements on a uniform mesh; unknowns are the interior nodal
/// values. Element integrals for mass, stiffness and the quadratic convection
/// term are exact; the source load uses 2-point Gauss per element.
///
///   f(u) = -c(u) + nu K u + b(mu)
///
/// with c_i(u) = int u_h (u_h)_x phi_i, K the (negative semidefinite) weak
/// Laplacian and b_i = int g phi_i.
class BurgersSystem final : public DynamicalSystem {
 public:
  explicit BurgersSystem(const BurgersConfig& config);

  const BurgersConfig& config() const { return config_; }
  /// Weak Laplacian, tridiagonal with (1, -2, 1)/h.
  const SparseMatrix& stiffness() const { return stiffness_; }
  Vector convection(const Vector& u) const;
  Vector load(const Vector& mu) const;

  /// Nodal values on the full mesh including the two Dirichlet nodes.
  Vector full_field(const Vector& u) const;
  Vector node_positions() const;

 protected:
  Vector compute_velocity(const Vector& u, double t, const Vector& mu) const override;
  Operator compute_jacobian(const Vector& u, double t, const Vector& mu) const override;

 private:
  BurgersConfig config_;
  SparseMatrix stiffness_;
};

std::shared_ptr<BurgersSystem> assemble_burgers(const BurgersConfig& config);

}  // namespace romnn
