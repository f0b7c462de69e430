#include "romnn/linalg.hpp"

#include <cmath>

namespace romnn {

Operator::Operator(Matrix dense) : data_(std::move(dense)) {}

Operator::Operator(SparseMatrix sparse) : data_(std::move(sparse)) {
  std::get<SparseMatrix>(data_).makeCompressed();
}

Index Operator::rows() const {
  return std::visit([](const auto& m) { return static_cast<Index>(m.rows()); }, data_);
}

Index Operator::cols() const {
  return std::visit([](const auto& m) { return static_cast<Index>(m.cols()); }, data_);
}

Matrix Operator::to_dense() const {
  if (is_sparse()) return Matrix(sparse());
  return dense();
}

Vector Operator::apply(const Vector& x) const {
  return std::visit([&](const auto& m) -> Vector { return m * x; }, data_);
}

Matrix Operator::apply(const Matrix& x) const {
  return std::visit([&](const auto& m) -> Matrix { return m * x; }, data_);
}

Matrix Operator::gather_rows(const std::vector<Index>& rows) const {
  Matrix out(static_cast<Index>(rows.size()), cols());
  if (!is_sparse()) {
    for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Index>(r)) = dense().row(rows[r]);
    return out;
  }
  const Eigen::SparseMatrix<double, Eigen::RowMajor> row_major = sparse();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.row(static_cast<Index>(r)) = row_major.row(rows[r]);
  }
  return out;
}

Operator linear_combination(double a, const Operator& lhs, double b, const Operator& rhs) {
  if (lhs.rows() != rhs.rows() || lhs.cols() != rhs.cols()) {
    throw std::invalid_argument("linear_combination: operator shapes differ");
  }
  if (lhs.is_sparse() && rhs.is_sparse()) {
    SparseMatrix out = a * lhs.sparse() + b * rhs.sparse();
    return Operator(std::move(out));
  }
  if (lhs.is_sparse()) return Operator(Matrix(b * rhs.dense() + a * Matrix(lhs.sparse())));
  if (rhs.is_sparse()) return Operator(Matrix(a * lhs.dense() + b * Matrix(rhs.sparse())));
  return Operator(Matrix(a * lhs.dense() + b * rhs.dense()));
}

struct LinearSolver::Impl {
  std::variant<Eigen::PartialPivLU<Matrix>, Eigen::SparseLU<SparseMatrix>> lu;
  bool sparse = false;
};

LinearSolver::LinearSolver(const Operator& op) : impl_(std::make_unique<Impl>()), size_(op.rows()) {
  if (op.rows() != op.cols()) throw std::invalid_argument("LinearSolver: operator is not square");
  if (op.is_sparse()) {
    impl_->sparse = true;
    auto& lu = impl_->lu.emplace<Eigen::SparseLU<SparseMatrix>>();
    lu.analyzePattern(op.sparse());
    lu.factorize(op.sparse());
    if (lu.info() != Eigen::Success) throw SingularMatrixError("sparse LU factorization failed");
  } else {
    auto& lu = impl_->lu.emplace<Eigen::PartialPivLU<Matrix>>(op.dense());
    const double rcond = lu.rcond();
    if (!(rcond > 0.0) || !std::isfinite(rcond)) throw SingularMatrixError("dense LU factorization is singular");
  }
}

LinearSolver::~LinearSolver() = default;
LinearSolver::LinearSolver(LinearSolver&&) noexcept = default;
LinearSolver& LinearSolver::operator=(LinearSolver&&) noexcept = default;

Vector LinearSolver::solve(const Vector& rhs) const {
  return std::visit([&](const auto& lu) -> Vector { return lu.solve(rhs); }, impl_->lu);
}

bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace romnn
