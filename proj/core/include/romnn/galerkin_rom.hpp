#pragma once

#include "romnn/dynsys.hpp"
#include "romnn/pod.hpp"

#include <memory>

namespace romnn {

/// Phi^T M Phi
Matrix reduced_mass(const Operator& mass, const Matrix& basis);

/// Galerkin reduced-order model (test basis = trial basis):
///   M_r dy/dt = Phi^T f(u_bar + Phi y, t, mu),  y(0) = Phi^T (u_0 - u_bar).
/// The reduced velocity is evaluated exactly through the full-order model.
class GalerkinRom final : public DynamicalSystem {
 public:
  GalerkinRom(std::shared_ptr<const DynamicalSystem> hdm, ReducedBasis basis);

  const DynamicalSystem& hdm() const { return *hdm_; }
  const ReducedBasis& basis() const { return basis_; }

 protected:
  /// Phi^T f(u_bar + Phi tau, t, mu)
  Vector compute_velocity(const Vector& tau, double t, const Vector& mu) const override;
  /// Phi^T J(u_bar + Phi tau) Phi
  Operator compute_jacobian(const Vector& tau, double t, const Vector& mu) const override;

 private:
  std::shared_ptr<const DynamicalSystem> hdm_;
  ReducedBasis basis_;
};

std::shared_ptr<GalerkinRom> build_rom(std::shared_ptr<const DynamicalSystem> hdm, ReducedBasis basis);

}  // namespace romnn
