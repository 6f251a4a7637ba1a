#include "csbayes/linalg.hpp"

#include "csbayes/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace csbayes {

namespace {

void require_rows(const PsdFactorization& f, Eigen::Index rows) {
  if (static_cast<std::size_t>(rows) != f.dimension()) {
    fail(ErrorCode::DimensionMismatch, "right-hand side has " + std::to_string(rows) +
                                           " rows, factor has dimension " +
                                           std::to_string(f.dimension()));
  }
}

}  // namespace

Matrix PsdFactorization::solve(const Matrix& b) const {
  require_rows(*this, b.rows());
  return llt_.solve(b);
}

Vector PsdFactorization::solve(const Vector& b) const {
  require_rows(*this, b.rows());
  return llt_.solve(b);
}

Matrix PsdFactorization::solve_lower(const Matrix& b) const {
  require_rows(*this, b.rows());
  return llt_.matrixL().solve(b);
}

double PsdFactorization::logdet() const {
  const auto& l = llt_.matrixLLT();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) acc += std::log(l(i, i));
  return 2.0 * acc;
}

PsdFactorization cholesky(const Matrix& m) {
  if (m.rows() != m.cols()) {
    fail(ErrorCode::DimensionMismatch, "cholesky needs a square matrix");
  }
  if (m.rows() == 0) fail(ErrorCode::EmptyInput, "cholesky of an empty matrix");
  if (!all_finite(m)) fail(ErrorCode::NotPositiveDefinite, "matrix has non-finite entries");

  const double scale = std::max(m.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * scale) {
    fail(ErrorCode::NotPositiveDefinite, "matrix is not symmetric");
  }

  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) {
    fail(ErrorCode::NotPositiveDefinite, "non-positive pivot encountered");
  }
  const auto& l = llt.matrixLLT();
  for (Eigen::Index i = 0; i < l.rows(); ++i) {
    if (!(l(i, i) > 0.0) || !std::isfinite(l(i, i))) {
      fail(ErrorCode::NotPositiveDefinite, "non-positive pivot encountered");
    }
  }
  return PsdFactorization(std::move(llt));
}

Matrix solve_psd(const PsdFactorization& f, const Matrix& b) { return f.solve(b); }

double logdet_psd(const PsdFactorization& f) { return f.logdet(); }

double logsumexp(std::span<const double> v) {
  if (v.empty()) fail(ErrorCode::EmptyInput, "logsumexp of an empty sequence");
  const double peak = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(peak)) return peak;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - peak);
  return peak + std::log(acc);
}

double logsumexp(const Vector& v) {
  return logsumexp(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

bool all_finite(const Matrix& m) noexcept { return m.allFinite(); }

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    fail(ErrorCode::DimensionMismatch, "max_abs_diff shape mismatch");
  }
  if (a.size() == 0) return 0.0;
  return (a - b).cwiseAbs().maxCoeff();
}

double relative_error(const Matrix& actual, const Matrix& expected) {
  if (actual.rows() != expected.rows() || actual.cols() != expected.cols()) {
    fail(ErrorCode::DimensionMismatch, "relative_error shape mismatch");
  }
  const double denom = expected.norm();
  const double diff = (actual - expected).norm();
  if (denom == 0.0) return diff;
  return diff / denom;
}

}  // namespace csbayes
