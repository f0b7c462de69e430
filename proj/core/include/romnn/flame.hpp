#pragma once

#include "romnn/dynsys.hpp"

#include <array>
#include <memory>

namespace romnn {

enum class ConvectionScheme { upwind, central };

/// Premixed H2-air flame on [0, Lx] x [0, Ly] with one-step Arrhenius
/// chemistry 2 H2 + O2 -> 2 H2O. Fields per node: (Y_F, Y_O, Y_P, Theta).
/// Units are cm, g, s, K throughout.
struct FlameConfig {
  double length_x = 1.8;
  double length_y = 0.9;
  /// Grid nodes per direction, including boundary nodes.
  Index nx = 40;
  Index ny = 20;
  double horizon = 0.06;
  Index n_steps = 50;
  double diffusivity = 2.0;
  std::array<double, 2> velocity{50.0, 0.0};
  double density = 1.39e-3;
  std::array<double, 3> molecular_weight{2.016, 31.9, 18.0};
  std::array<int, 3> stoichiometry{2, 1, 2};
  double heat_of_reaction = 9800.0;
  double gas_constant = 8.314472;
  ParamBox param_box{{2.3375e12, 5625.5}, {6.2e12, 9000.0}};
  std::array<double, 4> wall_state{0.0, 0.0, 0.0, 300.0};
  std::array<double, 4> inlet_state{0.0282, 0.2259, 0.0, 950.0};
  std::array<double, 2> inlet_extent{0.3, 0.6};
  std::array<double, 4> initial_state{0.0, 0.0, 0.0, 300.0};
  ConvectionScheme convection = ConvectionScheme::upwind;
  /// Lower clamp on Theta inside exp(-E / (R Theta)).
  double min_temperature = 1.0;

  double dx() const { return length_x / static_cast<double>(nx - 1); }
  double dy() const { return length_y / static_cast<double>(ny - 1); }
  Index interior_nx() const { return nx - 2; }
  Index interior_ny() const { return ny - 2; }
  Index unknown_nodes() const { return interior_nx() * interior_ny(); }
  Index dofs() const { return 4 * unknown_nodes(); }
  TimeGrid time_grid() const { return TimeGrid::uniform(horizon, n_steps); }
};

using FlameState = std::array<double, 4>;

/// Pointwise source (N_F, N_O, N_P, N_Theta) with fuel and oxidizer consumed,
/// product created and N_Theta = Q N_P.
FlameState arrhenius_source(const FlameConfig& config, const FlameState& state, const Vector& mu);

/// d(source)/d(state) as a row-major 4x4 block.
std::array<double, 16> arrhenius_jacobian(const FlameConfig& config, const FlameState& state,
                                          const Vector& mu);

/// Finite-difference semi-discretization with identity mass.
///
/// Unknowns live on the interior nodes (1..nx-2) x (1..ny-2), four fields per
/// node, node-major. The left edge is Dirichlet (inlet on inlet_extent, wall
/// state elsewhere). Bottom, right and top edges are zero-gradient: the
/// boundary node takes the value of its interior neighbour.
///
///   f(u) = L u + b + N(u, mu)
///
/// where L holds kappa * (5-point Laplacian) - beta . grad and b the Dirichlet
/// data that enters L's stencil.
class FlameSystem final : public DynamicalSystem {
 public:
  explicit FlameSystem(const FlameConfig& config);

  const FlameConfig& config() const { return config_; }
  const SparseMatrix& linear_operator() const { return linear_; }
  const Vector& boundary_load() const { return boundary_load_; }
  /// Index of field `field` at interior node (i, j), 1-based grid indices.
  Index dof(Index i, Index j, int field) const;
  /// Pointwise reaction source evaluated at every unknown node.
  Vector reaction(const Vector& u, const Vector& mu) const;
  /// Full (nx x ny) grid of one field, boundary values filled in.
  Matrix field_on_grid(const Vector& u, int field) const;

 protected:
  Vector compute_velocity(const Vector& u, double t, const Vector& mu) const override;
  Operator compute_jacobian(const Vector& u, double t, const Vector& mu) const override;

 private:
  FlameConfig config_;
  SparseMatrix linear_;
  Vector boundary_load_;
};

std::shared_ptr<FlameSystem> assemble_flame(const FlameConfig& config);

}  // namespace romnn
