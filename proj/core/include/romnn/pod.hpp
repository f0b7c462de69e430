#pragma once

#include "romnn/dynsys.hpp"

#include <span>
#include <stdexcept>
#include <vector>

namespace romnn {

/// Global snapshot matrix [X_1 ... X_Ns]; X_k holds u(t_1..t_Nt, mu_k), with
/// t_0 excluded. `velocities` is column-aligned: f(u(t_i, mu_k), t_i, mu_k).
struct SnapshotSet {
  Matrix states;
  Matrix velocities;
  std::vector<double> times;  // t_1 .. t_Nt
  std::vector<Vector> params;

  Index steps() const { return static_cast<Index>(times.size()); }
  Index column(Index param, Index step) const { return param * steps() + step; }
};

/// Runs one HDM integration per parameter and records the snapshots.
/// Throws std::runtime_error naming the parameter if any HDM run diverges.
SnapshotSet collect_snapshots(const DynamicalSystem& system, const TimeGrid& grid,
                              std::span<const Vector> params, const IntegrateOptions& options = {},
                              int workers = 1);

/// Builds a snapshot set from already computed HDM trajectories, evaluating
/// the velocity at each stored state.
SnapshotSet snapshots_from_trajectories(const DynamicalSystem& system, const TimeGrid& grid,
                                        std::span<const Trajectory> trajectories);

class RankDeficiencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Affine trial subspace  { offset + basis * y }  with column-orthonormal basis.
struct ReducedBasis {
  Vector offset;
  Matrix basis;
  /// Full singular spectrum of the translated snapshot matrix.
  Vector singular_values;

  Index full_dim() const { return basis.rows(); }
  Index size() const { return basis.cols(); }

  /// basis^T (u - offset)
  Vector project(const Vector& u) const;
  Matrix project(const Matrix& states) const;
  /// offset + basis * y
  Vector reconstruct(const Vector& y) const;
  Matrix reconstruct(const Matrix& coordinates) const;
};

enum class PodMethod {
  /// Gram-matrix eigendecomposition when the snapshot count is below the state
  /// dimension and the requested modes are well above round-off; thin SVD
  /// otherwise.
  automatic,
  method_of_snapshots,
  thin_svd,
};

/// First k left singular vectors of (states - offset 1^T), descending order,
/// each with its largest-magnitude entry positive.
///
/// Throws std::invalid_argument unless 1 <= k <= min(rows, cols), and
/// RankDeficiencyError when sigma_k / sigma_1 < 1e-13 (or sigma_1 = 0).
ReducedBasis compute_pod_basis(const Matrix& states, const Vector& offset, Index k,
                               PodMethod method = PodMethod::automatic);

/// Left singular vectors and singular values of `data` (thin), sorted
/// descending. Shared by the POD and DEIM constructions.
struct LeftSingular {
  Matrix vectors;
  Vector values;
};
LeftSingular left_singular_vectors(const Matrix& data, Index k, PodMethod method = PodMethod::automatic);

}  // namespace romnn
