#include "romnn/galerkin_rom.hpp"

namespace romnn {
namespace {

const ReducedBasis& checked(const DynamicalSystem& hdm, const ReducedBasis& basis) {
  if (basis.full_dim() != hdm.dim() || basis.offset.size() != hdm.dim()) {
    throw std::invalid_argument("reduced basis dimension does not match the full-order model");
  }
  return basis;
}

}  // namespace

Matrix reduced_mass(const Operator& mass, const Matrix& basis) {
  return basis.transpose() * mass.apply(basis);
}

GalerkinRom::GalerkinRom(std::shared_ptr<const DynamicalSystem> hdm, ReducedBasis basis)
    : DynamicalSystem(reduced_mass(hdm->mass(), checked(*hdm, basis).basis),
                      basis.project(hdm->initial_state()), hdm->param_box()),
      hdm_(std::move(hdm)),
      basis_(std::move(basis)) {}

Vector GalerkinRom::compute_velocity(const Vector& tau, double t, const Vector& mu) const {
  return basis_.basis.transpose() * hdm_->velocity(basis_.reconstruct(tau), t, mu);
}

Operator GalerkinRom::compute_jacobian(const Vector& tau, double t, const Vector& mu) const {
  const Operator jac = hdm_->jacobian(basis_.reconstruct(tau), t, mu);
  return Operator(Matrix(basis_.basis.transpose() * jac.apply(basis_.basis)));
}

std::shared_ptr<GalerkinRom> build_rom(std::shared_ptr<const DynamicalSystem> hdm, ReducedBasis basis) {
  return std::make_shared<GalerkinRom>(std::move(hdm), std::move(basis));
}

}  // namespace romnn
