#include "romnn/pod.hpp"

#include "romnn/parallel.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <sstream>

namespace romnn {
namespace {

constexpr double kRankTolerance = 1e-13;
// Below this singular-value ratio the Gram route loses orthonormality at the
// 1e-10 level (error grows like eps * (sigma_1 / sigma_k)^2).
constexpr double kGramRatioFloor = 1e-3;

std::string describe(const Vector& mu) {
  std::ostringstream os;
  os << "(";
  for (Index i = 0; i < mu.size(); ++i) os << (i ? ", " : "") << mu[i];
  os << ")";
  return os.str();
}

void fix_signs(Matrix& vectors) {
  for (Index c = 0; c < vectors.cols(); ++c) {
    Index arg = 0;
    vectors.col(c).cwiseAbs().maxCoeff(&arg);
    if (vectors(arg, c) < 0.0) vectors.col(c) *= -1.0;
  }
}

LeftSingular via_thin_svd(const Matrix& data, Index k) {
  Eigen::BDCSVD<Matrix> svd(data, Eigen::ComputeThinU);
  return {svd.matrixU().leftCols(k), svd.singularValues()};
}

LeftSingular via_gram(const Matrix& data, Index k) {
  const Matrix gram = data.transpose() * data;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  const Index n = gram.rows();
  Vector values(n);
  Matrix right(n, n);
  for (Index i = 0; i < n; ++i) {
    values[i] = std::sqrt(std::max(eig.eigenvalues()[n - 1 - i], 0.0));
    right.col(i) = eig.eigenvectors().col(n - 1 - i);
  }
  Matrix vectors(data.rows(), k);
  for (Index i = 0; i < k; ++i) {
    vectors.col(i) = values[i] > 0.0 ? Vector(data * right.col(i) / values[i]) : Vector::Zero(data.rows());
  }
  return {std::move(vectors), std::move(values)};
}

}  // namespace

LeftSingular left_singular_vectors(const Matrix& data, Index k, PodMethod method) {
  const Index max_k = std::min(data.rows(), data.cols());
  if (k < 1 || k > max_k) {
    throw std::invalid_argument("requested " + std::to_string(k) + " modes; must lie in [1, " +
                                std::to_string(max_k) + "]");
  }
  LeftSingular out;
  switch (method) {
    case PodMethod::thin_svd:
      out = via_thin_svd(data, k);
      break;
    case PodMethod::method_of_snapshots:
      out = via_gram(data, k);
      break;
    case PodMethod::automatic:
      if (data.cols() < data.rows()) {
        out = via_gram(data, k);
        const double s1 = out.values[0];
        if (!(s1 > 0.0) || out.values[k - 1] / s1 < kGramRatioFloor) {
          out = via_thin_svd(data, k);
        } else if (out.values.tail(1)[0] / s1 < kGramRatioFloor) {
          // Trailing Gram values are only accurate to sqrt(eps) * sigma_1.
          out.values = Eigen::BDCSVD<Matrix>(data).singularValues();
        }
      } else {
        out = via_thin_svd(data, k);
      }
      break;
  }
  const double s1 = out.values.size() ? out.values[0] : 0.0;
  if (!(s1 > 0.0)) throw RankDeficiencyError("snapshot matrix is zero; nothing to compress");
  if (out.values[k - 1] / s1 < kRankTolerance) {
    Index rank = 0;
    while (rank < out.values.size() && out.values[rank] / s1 >= kRankTolerance) ++rank;
    throw RankDeficiencyError("requested " + std::to_string(k) + " modes but the numerical rank is " +
                              std::to_string(rank) + "; use a smaller basis size");
  }
  fix_signs(out.vectors);
  return out;
}

ReducedBasis compute_pod_basis(const Matrix& states, const Vector& offset, Index k, PodMethod method) {
  if (offset.size() != states.rows()) throw std::invalid_argument("compute_pod_basis: offset size mismatch");
  const Matrix translated = states.colwise() - offset;
  LeftSingular sv = left_singular_vectors(translated, k, method);
  return ReducedBasis{offset, std::move(sv.vectors), std::move(sv.values)};
}

Vector ReducedBasis::project(const Vector& u) const { return basis.transpose() * (u - offset); }

Matrix ReducedBasis::project(const Matrix& states) const {
  return basis.transpose() * (states.colwise() - offset);
}

Vector ReducedBasis::reconstruct(const Vector& y) const { return offset + basis * y; }

Matrix ReducedBasis::reconstruct(const Matrix& coordinates) const {
  return (basis * coordinates).colwise() + offset;
}

SnapshotSet snapshots_from_trajectories(const DynamicalSystem& system, const TimeGrid& grid,
                                        std::span<const Trajectory> trajectories) {
  const Index steps = grid.steps();
  SnapshotSet snaps;
  snaps.times.assign(grid.nodes().begin() + 1, grid.nodes().end());
  const auto count = static_cast<Index>(trajectories.size());
  snaps.states.resize(system.dim(), count * steps);
  snaps.velocities.resize(system.dim(), count * steps);
  for (Index p = 0; p < count; ++p) {
    const Trajectory& traj = trajectories[static_cast<std::size_t>(p)];
    if (!traj.converged() || traj.states.cols() != steps + 1) {
      throw std::runtime_error("HDM trajectory diverged for parameter " + describe(traj.params));
    }
    snaps.params.push_back(traj.params);
    for (Index i = 1; i <= steps; ++i) {
      const Index col = snaps.column(p, i - 1);
      snaps.states.col(col) = traj.states.col(i);
      snaps.velocities.col(col) = system.velocity(traj.states.col(i), grid[i], traj.params);
    }
  }
  return snaps;
}

SnapshotSet collect_snapshots(const DynamicalSystem& system, const TimeGrid& grid,
                              std::span<const Vector> params, const IntegrateOptions& options, int workers) {
  std::vector<Trajectory> runs(params.size());
  parallel_for(params.size(), workers, [&](std::size_t j) {
    runs[j] = integrate(system, grid, params[j], options);
    if (!runs[j].converged()) {
      throw std::runtime_error("HDM trajectory diverged for parameter " + describe(params[j]));
    }
  });
  return snapshots_from_trajectories(system, grid, runs);
}

}  // namespace romnn
