#pragma once

#include "csbayes/dictionary.hpp"
#include "csbayes/linalg.hpp"

#include <memory>

namespace csbayes {

/// Everything an inference call needs for one observation model
/// y = A D s + n, n ~ N(0, noise_var I). Phi = A D is precomputed; A itself
/// is kept only when the caller asks for it (per-sample problems drop it).
class SensingProblem {
 public:
  /// Throws DimensionMismatch when A's columns differ from D's rows, and
  /// InvalidArgument for a negative or non-finite noise variance.
  SensingProblem(const Matrix& measurement, std::shared_ptr<const Dictionary> dictionary,
                 double noise_var, bool keep_measurement = true);

  /// Problem with A = I, so Phi = D (ground-truth signal fits).
  static SensingProblem identity_measurement(std::shared_ptr<const Dictionary> dictionary,
                                             double noise_var);

  const Matrix& phi() const noexcept { return phi_; }
  const Dictionary& dictionary() const noexcept { return *dictionary_; }
  const std::shared_ptr<const Dictionary>& dictionary_ptr() const noexcept { return dictionary_; }
  bool has_measurement() const noexcept { return static_cast<bool>(measurement_); }
  /// Throws InvalidArgument when A was not kept.
  const Matrix& measurement() const;
  double noise_var() const noexcept { return noise_var_; }

  Eigen::Index m() const noexcept { return phi_.rows(); }
  Eigen::Index s() const noexcept { return phi_.cols(); }
  Eigen::Index n() const noexcept { return dictionary_->signal_dim(); }

  SensingProblem with_noise_var(double noise_var) const;

 private:
  SensingProblem() = default;

  std::shared_ptr<const Dictionary> dictionary_;
  std::shared_ptr<const Matrix> measurement_;
  Matrix phi_;
  double noise_var_ = 0.0;
};

}  // namespace csbayes
