#include "romnn/flame.hpp"

#include <cmath>

namespace romnn {
namespace {

double ipow(double x, int n) {
  double r = 1.0;
  for (int k = 0; k < n; ++k) r *= x;
  return r;
}

const FlameConfig& validated(const FlameConfig& c) {
  if (c.nx < 4 || c.ny < 4) throw std::invalid_argument("FlameConfig: nx and ny must be >= 4");
  if (!(c.length_x > 0 && c.length_y > 0 && c.diffusivity > 0 && c.density > 0 && c.heat_of_reaction > 0 &&
        c.gas_constant > 0)) {
    throw std::invalid_argument("FlameConfig: physical constants must be positive");
  }
  for (double w : c.molecular_weight) {
    if (!(w > 0)) throw std::invalid_argument("FlameConfig: molecular weights must be positive");
  }
  if (!(c.inlet_extent[0] >= 0.0 && c.inlet_extent[0] <= c.inlet_extent[1] && c.inlet_extent[1] <= c.length_y)) {
    throw std::invalid_argument("FlameConfig: inlet extent must lie within [0, Ly]");
  }
  if (c.param_box.dim() != 2) throw std::invalid_argument("FlameConfig: parameter box must be 2D");
  return c;
}

Vector initial_flame_state(const FlameConfig& c) {
  Vector u0(c.dofs());
  for (Index k = 0; k < c.unknown_nodes(); ++k) {
    for (int f = 0; f < 4; ++f) u0[4 * k + f] = c.initial_state[static_cast<std::size_t>(f)];
  }
  return u0;
}

SparseMatrix identity(Index n) {
  SparseMatrix id(n, n);
  id.setIdentity();
  return id;
}

// Rate of progress  A exp(-E / (R Theta)) prod_k (rho Y_k / W_k)^{nu_k}  over
// fuel and oxidizer, plus its derivatives w.r.t. (Y_F, Y_O, Theta).
struct Progress {
  double rate;
  double d_fuel;
  double d_oxidizer;
  double d_temperature;
};

Progress progress(const FlameConfig& c, const FlameState& s, const Vector& mu) {
  const double rho = c.density;
  const auto& w = c.molecular_weight;
  const auto& nu = c.stoichiometry;
  const double conc_f = rho * s[0] / w[0];
  const double conc_o = rho * s[1] / w[1];
  const bool clamped = s[3] < c.min_temperature;
  const double theta = clamped ? c.min_temperature : s[3];
  const double arrhenius = mu[0] * std::exp(-mu[1] / (c.gas_constant * theta));
  const double pf = ipow(conc_f, nu[0]);
  const double po = ipow(conc_o, nu[1]);

  Progress p{};
  p.rate = arrhenius * pf * po;
  p.d_fuel = nu[0] > 0 ? arrhenius * nu[0] * ipow(conc_f, nu[0] - 1) * (rho / w[0]) * po : 0.0;
  p.d_oxidizer = nu[1] > 0 ? arrhenius * pf * nu[1] * ipow(conc_o, nu[1] - 1) * (rho / w[1]) : 0.0;
  p.d_temperature = clamped ? 0.0 : p.rate * mu[1] / (c.gas_constant * theta * theta);
  return p;
}

// Coefficients converting the rate of progress into (N_F, N_O, N_P, N_Theta).
std::array<double, 4> source_coefficients(const FlameConfig& c) {
  const double rho = c.density;
  const auto& w = c.molecular_weight;
  const auto& nu = c.stoichiometry;
  const double product = nu[2] * w[2] / rho;
  return {-nu[0] * w[0] / rho, -nu[1] * w[1] / rho, product, product * c.heat_of_reaction};
}

}  // namespace

FlameState arrhenius_source(const FlameConfig& config, const FlameState& state, const Vector& mu) {
  const Progress p = progress(config, state, mu);
  const auto coeff = source_coefficients(config);
  return {coeff[0] * p.rate, coeff[1] * p.rate, coeff[2] * p.rate, coeff[3] * p.rate};
}

std::array<double, 16> arrhenius_jacobian(const FlameConfig& config, const FlameState& state,
                                          const Vector& mu) {
  const Progress p = progress(config, state, mu);
  const auto coeff = source_coefficients(config);
  std::array<double, 16> block{};
  for (int r = 0; r < 4; ++r) {
    block[static_cast<std::size_t>(4 * r + 0)] = coeff[static_cast<std::size_t>(r)] * p.d_fuel;
    block[static_cast<std::size_t>(4 * r + 1)] = coeff[static_cast<std::size_t>(r)] * p.d_oxidizer;
    block[static_cast<std::size_t>(4 * r + 3)] = coeff[static_cast<std::size_t>(r)] * p.d_temperature;
  }
  return block;
}

FlameSystem::FlameSystem(const FlameConfig& config)
    : DynamicalSystem(identity(validated(config).dofs()), initial_flame_state(config), config.param_box),
      config_(config) {
  const FlameConfig& c = config_;
  const Index n = c.dofs();
  const double kx = c.diffusivity / (c.dx() * c.dx());
  const double ky = c.diffusivity / (c.dy() * c.dy());
  const double bx = c.velocity[0];
  const double by = c.velocity[1];

  boundary_load_ = Vector::Zero(n);
  std::vector<Triplet> triplets;
  triplets.reserve(static_cast<std::size_t>(5 * n));

  for (Index j = 1; j <= c.ny - 2; ++j) {
    const double y = static_cast<double>(j) * c.dy();
    const bool inlet = y >= c.inlet_extent[0] - 1e-12 && y <= c.inlet_extent[1] + 1e-12;
    const auto& dirichlet = inlet ? c.inlet_state : c.wall_state;

    for (Index i = 1; i <= c.nx - 2; ++i) {
      // Stencil weights for (self, west, east, south, north).
      double w_self = -2.0 * kx - 2.0 * ky;
      double w_west = kx, w_east = kx, w_south = ky, w_north = ky;
      if (c.convection == ConvectionScheme::upwind) {
        if (bx >= 0.0) {
          w_self -= bx / c.dx();
          w_west += bx / c.dx();
        } else {
          w_self += bx / c.dx();
          w_east -= bx / c.dx();
        }
        if (by >= 0.0) {
          w_self -= by / c.dy();
          w_south += by / c.dy();
        } else {
          w_self += by / c.dy();
          w_north -= by / c.dy();
        }
      } else {
        w_west += bx / (2.0 * c.dx());
        w_east -= bx / (2.0 * c.dx());
        w_south += by / (2.0 * c.dy());
        w_north -= by / (2.0 * c.dy());
      }

      for (int f = 0; f < 4; ++f) {
        const Index row = dof(i, j, f);
        double diag = w_self;
        // West neighbour: Dirichlet column or interior node.
        if (i - 1 == 0) {
          boundary_load_[row] += w_west * dirichlet[static_cast<std::size_t>(f)];
        } else {
          triplets.emplace_back(row, dof(i - 1, j, f), w_west);
        }
        // East, south, north: zero-gradient edges fold into the diagonal.
        if (i + 1 == c.nx - 1) diag += w_east; else triplets.emplace_back(row, dof(i + 1, j, f), w_east);
        if (j - 1 == 0) diag += w_south; else triplets.emplace_back(row, dof(i, j - 1, f), w_south);
        if (j + 1 == c.ny - 1) diag += w_north; else triplets.emplace_back(row, dof(i, j + 1, f), w_north);
        triplets.emplace_back(row, row, diag);
      }
    }
  }
  linear_.resize(n, n);
  linear_.setFromTriplets(triplets.begin(), triplets.end());
  linear_.makeCompressed();
}

Index FlameSystem::dof(Index i, Index j, int field) const {
  return 4 * ((j - 1) * config_.interior_nx() + (i - 1)) + field;
}

Vector FlameSystem::reaction(const Vector& u, const Vector& mu) const {
  Vector out(u.size());
  for (Index k = 0; k < config_.unknown_nodes(); ++k) {
    const FlameState s{u[4 * k], u[4 * k + 1], u[4 * k + 2], u[4 * k + 3]};
    const FlameState r = arrhenius_source(config_, s, mu);
    for (int f = 0; f < 4; ++f) out[4 * k + f] = r[static_cast<std::size_t>(f)];
  }
  return out;
}

Vector FlameSystem::compute_velocity(const Vector& u, double /*t*/, const Vector& mu) const {
  return linear_ * u + boundary_load_ + reaction(u, mu);
}

Operator FlameSystem::compute_jacobian(const Vector& u, double /*t*/, const Vector& mu) const {
  const Index nodes = config_.unknown_nodes();
  std::vector<Triplet> triplets;
  triplets.reserve(static_cast<std::size_t>(12 * nodes));
  for (Index k = 0; k < nodes; ++k) {
    const FlameState s{u[4 * k], u[4 * k + 1], u[4 * k + 2], u[4 * k + 3]};
    const auto block = arrhenius_jacobian(config_, s, mu);
    for (int r = 0; r < 4; ++r) {
      for (int col : {0, 1, 3}) {
        const double v = block[static_cast<std::size_t>(4 * r + col)];
        if (v != 0.0) triplets.emplace_back(4 * k + r, 4 * k + col, v);
      }
    }
  }
  SparseMatrix reaction_jac(u.size(), u.size());
  reaction_jac.setFromTriplets(triplets.begin(), triplets.end());
  SparseMatrix jac = linear_ + reaction_jac;
  return Operator(std::move(jac));
}

Matrix FlameSystem::field_on_grid(const Vector& u, int field) const {
  const FlameConfig& c = config_;
  Matrix grid(c.nx, c.ny);
  for (Index j = 1; j <= c.ny - 2; ++j) {
    for (Index i = 1; i <= c.nx - 2; ++i) grid(i, j) = u[dof(i, j, field)];
  }
  for (Index j = 1; j <= c.ny - 2; ++j) grid(c.nx - 1, j) = grid(c.nx - 2, j);
  for (Index i = 1; i <= c.nx - 1; ++i) {
    grid(i, 0) = grid(i, 1);
    grid(i, c.ny - 1) = grid(i, c.ny - 2);
  }
  for (Index j = 0; j < c.ny; ++j) {
    const double y = static_cast<double>(j) * c.dy();
    const bool inlet = y >= c.inlet_extent[0] - 1e-12 && y <= c.inlet_extent[1] + 1e-12;
    grid(0, j) = (inlet ? c.inlet_state : c.wall_state)[static_cast<std::size_t>(field)];
  }
  return grid;
}

std::shared_ptr<FlameSystem> assemble_flame(const FlameConfig& config) {
  return std::make_shared<FlameSystem>(config);
}

}  // namespace romnn
