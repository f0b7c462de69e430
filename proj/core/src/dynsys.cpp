#include "romnn/dynsys.hpp"

#include <cmath>
#include <iostream>

namespace romnn {

bool ParamBox::contains(const Vector& mu) const {
  if (mu.size() != dim()) return false;
  for (Index i = 0; i < mu.size(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (mu[i] < lower[k] || mu[i] > upper[k]) return false;
  }
  return true;
}

TimeGrid::TimeGrid(std::vector<double> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.size() < 2) throw std::invalid_argument("TimeGrid: need at least two nodes");
  if (nodes_.front() != 0.0) throw std::invalid_argument("TimeGrid: first node must be 0");
  for (std::size_t n = 0; n + 1 < nodes_.size(); ++n) {
    if (!(nodes_[n] < nodes_[n + 1])) throw std::invalid_argument("TimeGrid: nodes must increase strictly");
  }
}

TimeGrid TimeGrid::uniform(double horizon, Index steps) {
  if (steps < 1 || !(horizon > 0.0)) throw std::invalid_argument("TimeGrid::uniform: bad horizon or step count");
  std::vector<double> nodes(static_cast<std::size_t>(steps) + 1);
  for (Index n = 0; n <= steps; ++n) {
    nodes[static_cast<std::size_t>(n)] = horizon * static_cast<double>(n) / static_cast<double>(steps);
  }
  nodes.back() = horizon;
  return TimeGrid(std::move(nodes));
}

DynamicalSystem::DynamicalSystem(Operator mass, Vector initial_state, ParamBox param_box)
    : mass_(std::move(mass)),
      mass_solver_(mass_),
      initial_state_(std::move(initial_state)),
      param_box_(std::move(param_box)) {
  if (mass_.rows() != initial_state_.size()) {
    throw std::invalid_argument("DynamicalSystem: mass matrix and initial state sizes differ");
  }
  if (param_box_.lower.size() != param_box_.upper.size()) {
    throw std::invalid_argument("DynamicalSystem: malformed parameter box");
  }
}

Vector DynamicalSystem::velocity(const Vector& u, double t, const Vector& mu) const {
  velocity_evals_.fetch_add(1, std::memory_order_relaxed);
  return compute_velocity(u, t, mu);
}

Operator DynamicalSystem::jacobian(const Vector& u, double t, const Vector& mu) const {
  jacobian_evals_.fetch_add(1, std::memory_order_relaxed);
  return compute_jacobian(u, t, mu);
}

Vector newton_solve(const ResidualFn& residual, const JacobianFn& jacobian, Vector guess,
                    const NewtonOptions& options) {
  if (!guess.allFinite()) throw ConvergenceError("newton: non-finite initial guess", INFINITY);
  Vector x = std::move(guess);
  Vector r = residual(x);
  double norm = r.norm();
  if (!std::isfinite(norm)) throw ConvergenceError("newton: non-finite residual at initial guess", norm);
  const double target = options.tol * std::max(1.0, norm);

  for (int iter = 0; iter <= options.max_iter; ++iter) {
    if (norm <= target) return x;
    if (iter == options.max_iter) break;

    Vector step;
    try {
      const LinearSolver solver(jacobian(x));
      step = solver.solve(-r);
    } catch (const SingularMatrixError&) {
      throw ConvergenceError("newton: singular Jacobian", norm);
    }
    if (!step.allFinite()) throw ConvergenceError("newton: non-finite Newton step", norm);

    double scale = 1.0;
    Vector trial = x + step;
    Vector r_trial = residual(trial);
    double trial_norm = r_trial.norm();
    for (int h = 0; h < options.max_halvings && !(trial_norm < norm); ++h) {
      scale *= 0.5;
      trial = x + scale * step;
      r_trial = residual(trial);
      trial_norm = r_trial.norm();
    }
    if (!trial.allFinite() || !std::isfinite(trial_norm)) {
      throw ConvergenceError("newton: non-finite iterate", trial_norm);
    }
    x = std::move(trial);
    r = std::move(r_trial);
    norm = trial_norm;
  }
  throw ConvergenceError("newton: maximum iterations exceeded", norm);
}

const double Dirk2::gamma = 1.0 - std::sqrt(2.0) / 2.0;

double Dirk2::stability(double z) {
  const double den = 1.0 - gamma * z;
  return (1.0 + (1.0 - 2.0 * gamma) * z) / (den * den);
}

namespace {

// Solves M k = f(base + dt*gamma*k, t_stage, mu) for the stage velocity k.
Vector solve_stage(const DynamicalSystem& system, const Vector& base, double t_stage, double dt,
                   const Vector& mu, Vector guess, const NewtonOptions& options) {
  const double h = dt * Dirk2::gamma;
  const Operator& mass = system.mass();
  auto residual = [&](const Vector& k) -> Vector {
    return mass.apply(k) - system.velocity(base + h * k, t_stage, mu);
  };
  auto jacobian = [&](const Vector& k) -> Operator {
    return linear_combination(1.0, mass, -h, system.jacobian(base + h * k, t_stage, mu));
  };
  return newton_solve(residual, jacobian, std::move(guess), options);
}

}  // namespace

Vector dirk2_step(const DynamicalSystem& system, double t, double dt, const Vector& state,
                  const Vector& mu, const NewtonOptions& options, StageCache* cache) {
  if (!(dt > 0.0)) throw std::invalid_argument("dirk2_step: dt must be positive");
  const double g = Dirk2::gamma;
  const Index n = system.dim();

  Vector guess1 = (cache && cache->k1) ? *cache->k1 : Vector::Zero(n);
  Vector k1 = solve_stage(system, state, t + g * dt, dt, mu, std::move(guess1), options);

  const Vector base2 = state + dt * (1.0 - g) * k1;
  Vector guess2 = (cache && cache->k2) ? *cache->k2 : Vector::Zero(n);
  Vector k2 = solve_stage(system, base2, t + dt, dt, mu, std::move(guess2), options);

  Vector next = state + dt * ((1.0 - g) * k1 + g * k2);
  if (cache) {
    cache->k1 = std::move(k1);
    cache->k2 = std::move(k2);
  }
  return next;
}

Trajectory integrate(const DynamicalSystem& system, const TimeGrid& grid, const Vector& mu,
                     const IntegrateOptions& options) {
  if (mu.size() != system.param_dim()) {
    throw std::invalid_argument("integrate: parameter vector has " + std::to_string(mu.size()) +
                                " entries, system expects " + std::to_string(system.param_dim()));
  }
  if (!system.param_box().contains(mu)) {
    std::clog << "warning: integrating outside the parameter box\n";
  }

  const Index steps = grid.steps();
  Trajectory traj;
  traj.params = mu;
  traj.states.resize(system.dim(), steps + 1);
  traj.states.col(0) = system.initial_state();

  const double limit = options.blowup_factor * (system.initial_state().array() + 1.0).matrix().norm();
  StageCache cache;
  Vector u = system.initial_state();
  for (Index n = 0; n < steps; ++n) {
    const double t = grid[n];
    const double dt = grid[n + 1] - t;
    try {
      u = dirk2_step(system, t, dt, u, mu, options.newton, &cache);
    } catch (const ConvergenceError& e) {
      traj.failed_step = n + 1;
      traj.failure_residual = e.residual_norm();
      break;
    }
    if (!u.allFinite() || u.norm() > limit) {
      traj.failed_step = n + 1;
      break;
    }
    traj.states.col(n + 1) = u;
  }
  if (traj.failed_step) traj.states.conservativeResize(Eigen::NoChange, *traj.failed_step);
  return traj;
}

}  // namespace romnn
