#pragma once

#include "romnn/linalg.hpp"

#include <atomic>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

namespace romnn {

/// Axis-aligned parameter domain: one (low, high) pair per parameter.
struct ParamBox {
  std::vector<double> lower;
  std::vector<double> upper;

  Index dim() const { return static_cast<Index>(lower.size()); }
  bool contains(const Vector& mu) const;
};

/// Strictly increasing time nodes t_0 = 0 < t_1 < ... < t_N = T.
class TimeGrid {
 public:
  explicit TimeGrid(std::vector<double> nodes);
  static TimeGrid uniform(double horizon, Index steps);

  Index steps() const { return static_cast<Index>(nodes_.size()) - 1; }
  double operator[](Index n) const { return nodes_[static_cast<std::size_t>(n)]; }
  double horizon() const { return nodes_.back(); }
  const std::vector<double>& nodes() const { return nodes_; }

 private:
  std::vector<double> nodes_;
};

/// First-order system  M du/dt = f(u, t, mu),  u(0) = u_0.
///
/// Immutable after construction and safe to share across threads. The public
/// velocity/jacobian entry points count evaluations so callers can verify
/// which models touch the full-order operators.
class DynamicalSystem {
 public:
  /// Factorizes `mass` once; throws SingularMatrixError if that fails.
  DynamicalSystem(Operator mass, Vector initial_state, ParamBox param_box);
  virtual ~DynamicalSystem() = default;

  DynamicalSystem(const DynamicalSystem&) = delete;
  DynamicalSystem& operator=(const DynamicalSystem&) = delete;

  Index dim() const { return initial_state_.size(); }
  Index param_dim() const { return param_box_.dim(); }
  const Operator& mass() const { return mass_; }
  const Vector& initial_state() const { return initial_state_; }
  const ParamBox& param_box() const { return param_box_; }

  Vector velocity(const Vector& u, double t, const Vector& mu) const;
  Operator jacobian(const Vector& u, double t, const Vector& mu) const;

  /// Solves M x = rhs with the factorization computed at construction.
  Vector solve_mass(const Vector& rhs) const { return mass_solver_.solve(rhs); }

  long velocity_evaluations() const { return velocity_evals_.load(); }
  long jacobian_evaluations() const { return jacobian_evals_.load(); }

 protected:
  virtual Vector compute_velocity(const Vector& u, double t, const Vector& mu) const = 0;
  virtual Operator compute_jacobian(const Vector& u, double t, const Vector& mu) const = 0;

 private:
  Operator mass_;
  LinearSolver mass_solver_;
  Vector initial_state_;
  ParamBox param_box_;
  mutable std::atomic<long> velocity_evals_{0};
  mutable std::atomic<long> jacobian_evals_{0};
};

/// Raised when a Newton solve fails; carries the last residual norm.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual_norm)
      : std::runtime_error(what), residual_norm_(residual_norm) {}
  double residual_norm() const { return residual_norm_; }

 private:
  double residual_norm_;
};

struct NewtonOptions {
  double tol = 1e-10;
  int max_iter = 25;
  int max_halvings = 10;
};

using ResidualFn = std::function<Vector(const Vector&)>;
using JacobianFn = std::function<Operator(const Vector&)>;

/// Damped Newton iteration. Converged when
///   ||r(x)|| <= tol * max(1, ||r(guess)||).
/// A step is halved (up to max_halvings times) while it fails to decrease the
/// residual norm. Throws ConvergenceError on max_iter or non-finite iterates.
Vector newton_solve(const ResidualFn& residual, const JacobianFn& jacobian, Vector guess,
                    const NewtonOptions& options = {});

/// Two-stage, second-order, L-stable DIRK (Alexander):
///   a11 = a22 = gamma, a21 = 1 - gamma, b = (1 - gamma, gamma), c = (gamma, 1),
///   gamma = 1 - sqrt(2)/2.
struct Dirk2 {
  static const double gamma;
  /// Stability function R(z) = (1 + (1 - 2 gamma) z) / (1 - gamma z)^2.
  static double stability(double z);
};

/// Stage velocities carried between steps as Newton warm starts.
struct StageCache {
  std::optional<Vector> k1;
  std::optional<Vector> k2;
};

/// One DIRK2 step from `state` at time t. Each stage velocity k_i solves
/// M k_i = f(u_n + dt * sum_j a_ij k_j, t + c_i dt, mu).
Vector dirk2_step(const DynamicalSystem& system, double t, double dt, const Vector& state,
                  const Vector& mu, const NewtonOptions& options = {}, StageCache* cache = nullptr);

struct Trajectory {
  /// dim x (retained steps + 1); column n is the state at t_n.
  Matrix states;
  Vector params;
  /// Step index whose solve failed or produced an unstable state.
  std::optional<Index> failed_step;
  /// Residual norm reported by the failing Newton solve (0 if the failure was
  /// a blow-up rather than non-convergence).
  double failure_residual = 0.0;

  bool converged() const { return !failed_step.has_value(); }
};

struct IntegrateOptions {
  NewtonOptions newton;
  /// A state is unstable if non-finite or ||u|| > blowup_factor * ||u_0 + 1||.
  double blowup_factor = 1e6;
};

/// Integrates the system over the grid. Solver failures are recorded in the
/// trajectory rather than thrown; a dimension mismatch between mu and the
/// parameter box throws std::invalid_argument.
Trajectory integrate(const DynamicalSystem& system, const TimeGrid& grid, const Vector& mu,
                     const IntegrateOptions& options = {});

}  // namespace romnn
