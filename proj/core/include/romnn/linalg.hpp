#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <memory>
#include <stdexcept>
#include <variant>
#include <vector>

namespace romnn {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

class SingularMatrixError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Square linear operator stored either densely (reduced systems) or in
/// compressed sparse form (semi-discretized PDEs).
class Operator {
 public:
  Operator(Matrix dense);          // NOLINT(google-explicit-constructor)
  Operator(SparseMatrix sparse);   // NOLINT(google-explicit-constructor)

  bool is_sparse() const { return std::holds_alternative<SparseMatrix>(data_); }
  Index rows() const;
  Index cols() const;

  const Matrix& dense() const { return std::get<Matrix>(data_); }
  const SparseMatrix& sparse() const { return std::get<SparseMatrix>(data_); }
  Matrix to_dense() const;

  Vector apply(const Vector& x) const;
  /// Returns op * X for a dense block of columns.
  Matrix apply(const Matrix& x) const;

  /// Rows of the operator selected by `rows`, returned densely.
  Matrix gather_rows(const std::vector<Index>& rows) const;

 private:
  std::variant<Matrix, SparseMatrix> data_;
};

/// a*A + b*B. The result is sparse only when both operands are sparse.
Operator linear_combination(double a, const Operator& lhs, double b, const Operator& rhs);

/// LU factorization of an Operator; dense partial pivoting or sparse
/// supernodal LU depending on storage.
class LinearSolver {
 public:
  /// Throws SingularMatrixError when the factorization fails.
  explicit LinearSolver(const Operator& op);
  ~LinearSolver();
  LinearSolver(LinearSolver&&) noexcept;
  LinearSolver& operator=(LinearSolver&&) noexcept;

  Vector solve(const Vector& rhs) const;
  Index size() const { return size_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  Index size_ = 0;
};

bool all_finite(const Vector& v);

}  // namespace romnn
