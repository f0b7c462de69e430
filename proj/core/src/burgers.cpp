#include "romnn/burgers.hpp"

#include <cmath>

namespace romnn {
namespace {

const BurgersConfig& validated(const BurgersConfig& config) {
  if (config.n_elements < 2) throw std::invalid_argument("BurgersConfig: n_elements must be >= 2");
  if (config.param_box.dim() != 3) throw std::invalid_argument("BurgersConfig: parameter box must be 3D");
  return config;
}

SparseMatrix tridiagonal(Index n, double diag, double off) {
  std::vector<Triplet> triplets;
  triplets.reserve(static_cast<std::size_t>(3 * n));
  for (Index i = 0; i < n; ++i) {
    triplets.emplace_back(i, i, diag);
    if (i > 0) triplets.emplace_back(i, i - 1, off);
    if (i + 1 < n) triplets.emplace_back(i, i + 1, off);
  }
  SparseMatrix m(n, n);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

SparseMatrix consistent_mass(const BurgersConfig& config) {
  const double h = config.element_size();
  return tridiagonal(config.dofs(), 2.0 * h / 3.0, h / 6.0);
}

}  // namespace

double burgers_source(double x, const Vector& mu) { return mu[1] * std::exp(mu[2] * x); }

BurgersSystem::BurgersSystem(const BurgersConfig& config)
    : DynamicalSystem(consistent_mass(validated(config)), Vector::Zero(config.dofs()), config.param_box),
      config_(config) {
  const double h = config_.element_size();
  stiffness_ = tridiagonal(config_.dofs(), -2.0 / h, 1.0 / h);
}

Vector BurgersSystem::convection(const Vector& u) const {
  // Summing the two element contributions at node i gives
  //   c_i = (u_{i+1} - u_{i-1}) (u_{i-1} + u_i + u_{i+1}) / 6.
  const Index n = u.size();
  Vector c(n);
  for (Index i = 0; i < n; ++i) {
    const double left = i > 0 ? u[i - 1] : 0.0;
    const double right = i + 1 < n ? u[i + 1] : 0.0;
    c[i] = (right - left) * (left + u[i] + right) / 6.0;
  }
  return c;
}

Vector BurgersSystem::load(const Vector& mu) const {
  const Index n = dim();
  const double h = config_.element_size();
  const double offset = 0.5 / std::sqrt(3.0);
  Vector b = Vector::Zero(n);
  for (Index e = 0; e < config_.n_elements; ++e) {
    const double x0 = static_cast<double>(e) * h;
    for (double xi : {0.5 - offset, 0.5 + offset}) {
      const double g = burgers_source(x0 + xi * h, mu) * 0.5 * h;
      // Element e spans nodes e and e+1; interior unknown j is node j+1.
      if (e >= 1) b[e - 1] += g * (1.0 - xi);
      if (e + 1 <= n) b[e] += g * xi;
    }
  }
  return b;
}

Vector BurgersSystem::compute_velocity(const Vector& u, double /*t*/, const Vector& mu) const {
  return -convection(u) + mu[0] * (stiffness_ * u) + load(mu);
}

Operator BurgersSystem::compute_jacobian(const Vector& u, double /*t*/, const Vector& mu) const {
  const Index n = u.size();
  std::vector<Triplet> triplets;
  triplets.reserve(static_cast<std::size_t>(3 * n));
  for (Index i = 0; i < n; ++i) {
    const double left = i > 0 ? u[i - 1] : 0.0;
    const double right = i + 1 < n ? u[i + 1] : 0.0;
    const double diff = right - left;
    const double sum = left + u[i] + right;
    if (i > 0) triplets.emplace_back(i, i - 1, -(diff - sum) / 6.0);
    triplets.emplace_back(i, i, -diff / 6.0);
    if (i + 1 < n) triplets.emplace_back(i, i + 1, -(sum + diff) / 6.0);
  }
  SparseMatrix convection_jac(n, n);
  convection_jac.setFromTriplets(triplets.begin(), triplets.end());
  SparseMatrix jac = convection_jac + mu[0] * stiffness_;
  return Operator(std::move(jac));
}

Vector BurgersSystem::full_field(const Vector& u) const {
  Vector full = Vector::Zero(u.size() + 2);
  full.segment(1, u.size()) = u;
  return full;
}

Vector BurgersSystem::node_positions() const {
  return Vector::LinSpaced(config_.n_elements + 1, 0.0, 1.0);
}

std::shared_ptr<BurgersSystem> assemble_burgers(const BurgersConfig& config) {
  return std::make_shared<BurgersSystem>(config);
}

}  // namespace romnn
