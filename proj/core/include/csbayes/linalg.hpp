#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>

namespace csbayes {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/// Lower-triangular Cholesky factor L of a symmetric positive definite
/// matrix m = L Lᵀ. Construct through cholesky().
class PsdFactorization {
 public:
  std::size_t dimension() const noexcept { return static_cast<std::size_t>(llt_.rows()); }

  Matrix lower() const { return llt_.matrixL(); }
  Matrix reconstruct() const { return llt_.reconstructedMatrix(); }

  /// m⁻¹ b
  Matrix solve(const Matrix& b) const;
  Vector solve(const Vector& b) const;

  /// L⁻¹ b (whitening)
  Matrix solve_lower(const Matrix& b) const;

  double logdet() const;

 private:
  friend PsdFactorization cholesky(const Matrix& m);
  explicit PsdFactorization(Eigen::LLT<Matrix> llt) : llt_(std::move(llt)) {}

  Eigen::LLT<Matrix> llt_;
};

/// Throws NotPositiveDefinite when m is not symmetric (1e-10 relative) or a
/// pivot is non-positive; DimensionMismatch when m is not square.
PsdFactorization cholesky(const Matrix& m);

/// Throws DimensionMismatch when b.rows() differs from the factor dimension.
Matrix solve_psd(const PsdFactorization& f, const Matrix& b);

double logdet_psd(const PsdFactorization& f);

/// log Σ exp(v_i), stable for large |v_i|. Throws EmptyInput.
double logsumexp(std::span<const double> v);
double logsumexp(const Vector& v);

bool all_finite(const Matrix& m) noexcept;

double max_abs_diff(const Matrix& a, const Matrix& b);
double relative_error(const Matrix& actual, const Matrix& expected);

}  // namespace csbayes
