#pragma once

#include "romnn/dynsys.hpp"
#include "romnn/pod.hpp"

#include <memory>
#include <vector>

namespace romnn {

/// Discrete empirical interpolation of the full-order velocity:
///   f_r(tau) ~ A P^T f(u_bar + Phi tau),  A = Phi^T Pi (P^T Pi)^{-1}.
struct DeimOperator {
  Matrix velocity_basis;              // Pi, N x k_f
  std::vector<Index> sample_indices;  // columns of P
  Matrix projector;                   // A, k_u x k_f
  double condition_number = 0.0;      // cond(P^T Pi)

  Index size() const { return static_cast<Index>(sample_indices.size()); }
};

/// First k_f left singular vectors of the (untranslated) velocity snapshots.
Matrix compute_deim_basis(const Matrix& velocity_snapshots, Index k_f);

/// Greedy DEIM point selection. Throws std::runtime_error if a residual
/// vanishes before k_f points are chosen.
std::vector<Index> select_interpolation_points(const Matrix& velocity_basis);

DeimOperator build_deim_operator(const ReducedBasis& basis, Matrix velocity_basis);

/// Reduced system driven by the DEIM-approximated velocity. The full velocity
/// is evaluated and then sampled; only the accuracy of DEIM is reproduced.
class DeimRom final : public DynamicalSystem {
 public:
  DeimRom(std::shared_ptr<const DynamicalSystem> hdm, ReducedBasis basis, DeimOperator op);

  const DeimOperator& deim() const { return op_; }
  const ReducedBasis& basis() const { return basis_; }

 protected:
  Vector compute_velocity(const Vector& tau, double t, const Vector& mu) const override;
  /// A (P^T J(u_bar + Phi tau)) Phi
  Operator compute_jacobian(const Vector& tau, double t, const Vector& mu) const override;

 private:
  std::shared_ptr<const DynamicalSystem> hdm_;
  ReducedBasis basis_;
  DeimOperator op_;
};

}  // namespace romnn
