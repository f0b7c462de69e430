#include "romnn/deim.hpp"

#include "romnn/galerkin_rom.hpp"

#include <Eigen/SVD>

namespace romnn {
namespace {

Matrix sampled_rows(const Matrix& m, const std::vector<Index>& rows, Index cols) {
  Matrix out(static_cast<Index>(rows.size()), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Index>(r)) = m.row(rows[r]).head(cols);
  return out;
}

}  // namespace

Matrix compute_deim_basis(const Matrix& velocity_snapshots, Index k_f) {
  return left_singular_vectors(velocity_snapshots, k_f).vectors;
}

std::vector<Index> select_interpolation_points(const Matrix& velocity_basis) {
  const Index k = velocity_basis.cols();
  std::vector<Index> points;
  points.reserve(static_cast<std::size_t>(k));
  if (k == 0) return points;

  Index first = 0;
  if (!(velocity_basis.col(0).cwiseAbs().maxCoeff(&first) > 0.0)) {
    throw std::runtime_error("DEIM: first velocity basis vector is zero");
  }
  points.push_back(first);

  for (Index m = 1; m < k; ++m) {
    const Matrix sampled = sampled_rows(velocity_basis, points, m);
    Vector rhs(m);
    for (Index r = 0; r < m; ++r) rhs[r] = velocity_basis(points[static_cast<std::size_t>(r)], m);
    const Vector c = sampled.partialPivLu().solve(rhs);
    const Vector residual = velocity_basis.col(m) - velocity_basis.leftCols(m) * c;
    Index next = 0;
    const double peak = residual.cwiseAbs().maxCoeff(&next);
    if (!(peak > 1e-12 * std::max(1.0, velocity_basis.col(m).cwiseAbs().maxCoeff()))) {
      throw std::runtime_error("DEIM: interpolation residual vanished at step " + std::to_string(m) +
                               "; velocity basis columns are dependent");
    }
    points.push_back(next);
  }
  return points;
}

DeimOperator build_deim_operator(const ReducedBasis& basis, Matrix velocity_basis) {
  if (velocity_basis.rows() != basis.full_dim()) throw std::invalid_argument("DEIM: basis size mismatch");
  DeimOperator op;
  op.sample_indices = select_interpolation_points(velocity_basis);
  const Matrix sampled = sampled_rows(velocity_basis, op.sample_indices, velocity_basis.cols());
  Eigen::JacobiSVD<Matrix> svd(sampled);
  const Vector& s = svd.singularValues();
  op.condition_number = s[s.size() - 1] > 0.0 ? s[0] / s[s.size() - 1] : INFINITY;
  // A = Phi^T Pi (P^T Pi)^{-1}, i.e. A^T = (P^T Pi)^{-T} (Phi^T Pi)^T.
  const Matrix phi_t_pi = basis.basis.transpose() * velocity_basis;
  op.projector = sampled.transpose().partialPivLu().solve(phi_t_pi.transpose()).transpose();
  op.velocity_basis = std::move(velocity_basis);
  return op;
}

DeimRom::DeimRom(std::shared_ptr<const DynamicalSystem> hdm, ReducedBasis basis, DeimOperator op)
    : DynamicalSystem(reduced_mass(hdm->mass(), basis.basis),
                      basis.project(hdm->initial_state()), hdm->param_box()),
      hdm_(std::move(hdm)),
      basis_(std::move(basis)),
      op_(std::move(op)) {
  if (op_.projector.rows() != basis_.size()) throw std::invalid_argument("DEIM: projector/basis mismatch");
}

Vector DeimRom::compute_velocity(const Vector& tau, double t, const Vector& mu) const {
  const Vector f = hdm_->velocity(basis_.reconstruct(tau), t, mu);
  Vector sampled(op_.size());
  for (Index r = 0; r < op_.size(); ++r) sampled[r] = f[op_.sample_indices[static_cast<std::size_t>(r)]];
  return op_.projector * sampled;
}

Operator DeimRom::compute_jacobian(const Vector& tau, double t, const Vector& mu) const {
  const Operator jac = hdm_->jacobian(basis_.reconstruct(tau), t, mu);
  const Matrix rows = jac.gather_rows(op_.sample_indices);
  return Operator(Matrix(op_.projector * (rows * basis_.basis)));
}

}  // namespace romnn
