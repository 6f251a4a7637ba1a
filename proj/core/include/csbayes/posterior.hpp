#pragma once

#include "csbayes/linalg.hpp"
#include "csbayes/problem.hpp"

#include <optional>

namespace csbayes {

/// Prior variances are floored here before any inversion.
inline constexpr double kGammaFloor = 1e-12;

/// Lower clamp applied by every EM-style variance update (SBL and CSGMM).
inline constexpr double kEmGammaClamp = 1e-10;

Vector floor_gamma(const Vector& gamma);

/// y | z ~ N(0, Phi diag(gamma) Phi^T + noise_var I), factorized.
struct ObservationGaussian {
  Matrix cov;
  PsdFactorization factor;

  Eigen::Index dim() const { return cov.rows(); }
  /// log N(y; 0, cov)
  double loglik(const Vector& y) const;
};

struct ConditionalPosterior {
  Vector mean;
  Vector diag_cov;
  std::optional<Matrix> full_cov;
  double logdet = 0.0;
};

/// Moments for one gamma and a batch of observations (one per column). The
/// posterior covariance does not depend on y, so diag_cov and logdet are
/// shared by the whole batch.
struct BatchPosterior {
  Matrix means;     // S x B
  Vector diag_cov;  // S
  Vector loglik;    // B, log N(y_b; 0, C_y)
  double logdet = 0.0;
};

/// Everything about one gamma that does not depend on y: the factorized
/// observation covariance, L^{-1} Phi, the posterior variances and logdet.
struct GammaFactor {
  Vector gamma;  // floored
  ObservationGaussian obs;
  Matrix whitened_phi;
  Vector diag_cov;
  double logdet = 0.0;
};

GammaFactor factor_gamma(const SensingProblem& p, const Vector& gamma);
/// log N(y_b; 0, C_y) per column.
Vector loglik_batch(const GammaFactor& f, const Matrix& ys);
/// Posterior means, one column per observation.
Matrix means_batch(const SensingProblem& p, const GammaFactor& f, const Matrix& ys);

/// Throws DimensionMismatch for a wrong gamma length, NotPositiveDefinite
/// when the covariance is singular (noise_var = 0 with rank-deficient Phi).
ObservationGaussian observation_cov(const SensingProblem& p, const Vector& gamma);

/// M x M route; never forms an S x S matrix.
ConditionalPosterior posterior_moments_fast(const SensingProblem& p, const Vector& gamma, const Vector& y);
ConditionalPosterior posterior_moments_fast(const SensingProblem& p, const Vector& gamma,
                                            const ObservationGaussian& obs, const Vector& y);

/// Mean only; skips the whitened Phi needed for the variances.
Vector posterior_mean(const SensingProblem& p, const Vector& gamma, const Vector& y);

BatchPosterior posterior_batch(const SensingProblem& p, const Vector& gamma, const Matrix& ys);

/// Textbook S x S route with the full covariance; for tests and small problems.
ConditionalPosterior posterior_moments_reference(const SensingProblem& p, const Vector& gamma,
                                                 const Vector& y);

/// noise_var = 0 route through the pseudoinverse of Phi diag(sqrt gamma).
/// logdet is -inf whenever S > rank, which is the usual case.
ConditionalPosterior posterior_moments_noisefree(const SensingProblem& p, const Vector& gamma,
                                                 const Vector& y);

/// M log(noise_var) - logdet(C_y) + sum(log gamma)
double logdet_posterior_cov(const SensingProblem& p, const Vector& gamma, const ObservationGaussian& obs);

double marginal_loglik(const ObservationGaussian& obs, const Vector& y);

/// tr(Phi C Phi^T) from the diagonal alone: noise_var (S - sum(diag_cov / gamma)).
double trace_phi_cov(const SensingProblem& p, const Vector& gamma, const Vector& diag_cov);

/// softmax(logliks + log_weights). Throws DimensionMismatch, EmptyInput.
Vector responsibilities(const Vector& logliks, const Vector& log_weights);

/// log of the mixture density sum_k w_k N(s; 0, diag(gammas.col(k))).
double mixture_log_density(const Vector& weights, const Matrix& gammas, const Vector& s);

/// sum_j [-(1/2) log(2 pi e) - log|s_j|]. Throws ZeroCoordinate.
double log_sparsity_bound(const Vector& s);

/// Whether the mixture density at s stays under prod_j (2 pi e)^{-1/2} / |s_j|.
/// Compared in the log domain with 1e-12 relative slack for rounding at the
/// touching point gamma_j = s_j^2. Throws ZeroCoordinate.
bool check_sparsity_bound(const Vector& weights, const Matrix& gammas, const Vector& s);

}  // namespace csbayes
