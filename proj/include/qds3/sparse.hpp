#pragma once

#include "qds3/errors.hpp"
#include "qds3/linalg.hpp"

#include <Eigen/Sparse>

#include <cstdint>
#include <string>
#include <vector>

namespace qds3 {

using Triplet = Eigen::Triplet<cplx, std::int64_t>;

/// Complex sparse operator in compressed row storage (Eigen backend).
class SparseOperator {
 public:
  using Matrix = Eigen::SparseMatrix<cplx, Eigen::RowMajor, std::int64_t>;

  SparseOperator() = default;

  explicit SparseOperator(Matrix m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols()) throw PreconditionError("SparseOperator: matrix must be square");
    m_.makeCompressed();
  }

  /// Duplicate (row, col) entries are summed.
  SparseOperator(std::int64_t dim, const std::vector<Triplet>& entries) : m_(dim, dim) {
    m_.setFromTriplets(entries.begin(), entries.end());
    m_.makeCompressed();
  }

  std::int64_t dimension() const { return m_.rows(); }
  std::int64_t nonzeros() const { return m_.nonZeros(); }
  const Matrix& matrix() const { return m_; }

  Eigen::VectorXcd apply(const Eigen::VectorXcd& v) const {
    if (v.size() != m_.cols())
      throw PreconditionError("SparseOperator::apply: dimension mismatch (" + std::to_string(v.size()) +
                              " vs " + std::to_string(m_.cols()) + ")");
    return m_ * v;
  }

  double hermiticity_defect() const {
    const Matrix diff = Matrix(m_.adjoint()) - m_;
    double worst = 0.0;
    for (std::int64_t k = 0; k < diff.outerSize(); ++k)
      for (Matrix::InnerIterator it(diff, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
    return worst;
  }

  bool is_hermitian(double tol = 1e-12) const { return hermiticity_defect() <= tol; }

  SparseOperator adjoint() const { return SparseOperator(Matrix(m_.adjoint())); }

  Eigen::MatrixXcd to_dense() const { return Eigen::MatrixXcd(m_); }

  /// Largest entry modulus.
  double max_abs() const {
    double worst = 0.0;
    for (std::int64_t k = 0; k < m_.outerSize(); ++k)
      for (Matrix::InnerIterator it(m_, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
    return worst;
  }

  friend SparseOperator operator+(const SparseOperator& a, const SparseOperator& b) {
    check_same(a, b);
    return SparseOperator(Matrix(a.m_ + b.m_));
  }
  friend SparseOperator operator-(const SparseOperator& a, const SparseOperator& b) {
    check_same(a, b);
    return SparseOperator(Matrix(a.m_ - b.m_));
  }
  friend SparseOperator operator*(const SparseOperator& a, const SparseOperator& b) {
    check_same(a, b);
    return SparseOperator(Matrix(a.m_ * b.m_));
  }
  friend SparseOperator operator*(cplx s, const SparseOperator& a) { return SparseOperator(Matrix(s * a.m_)); }

 private:
  static void check_same(const SparseOperator& a, const SparseOperator& b) {
    if (a.dimension() != b.dimension()) throw PreconditionError("SparseOperator: dimension mismatch");
  }

  Matrix m_;
};

inline SparseOperator commutator(const SparseOperator& a, const SparseOperator& b) { return a * b - b * a; }

}  // namespace qds3
