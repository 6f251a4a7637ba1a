#pragma once

#include "csbayes/linalg.hpp"
#include "csbayes/problem.hpp"
#include "csbayes/rng.hpp"

#include <cstddef>
#include <memory>
#include <vector>

namespace csbayes {

/// K zero-mean Gaussians with diagonal covariances over the coefficients.
struct GammaMixture {
  Vector weights;  // K, sums to 1
  Matrix gammas;   // S x K

  Eigen::Index components() const { return weights.size(); }
  Eigen::Index dim() const { return gammas.rows(); }
};

/// gamma log-uniform on [1e-2, 1] per coordinate, equal weights. Throws
/// InvalidArgument for k == 0.
GammaMixture init_mixture(std::size_t s, std::size_t k, SeededRng& rng);

/// Throws InvalidArgument when weights do not sum to 1 or gammas are not positive.
void validate_mixture(const GammaMixture& model);

struct EStepResult {
  Matrix responsibilities;  // N x K
  Matrix logliks;           // N x K, log N(y_i; 0, C_y|k)
  Matrix diag_cov;          // S x K
  Matrix weighted_second;   // S x K, sum_i r_ik mu_ik^2
  Vector masses;            // K, sum_i r_ik
  Vector sample_loglik;     // N, log sum_k rho_k N(y_i; 0, C_y|k)
  double log_evidence = 0.0;
};

/// One factorization per component, shared by all observations.
EStepResult csgmm_e_step(const GammaMixture& model, const SensingProblem& p, const Matrix& ys);

enum class EmptyComponentPolicy { Reseed, Throw };

struct MStepResult {
  GammaMixture model;
  std::vector<Eigen::Index> reseeded;
};

/// gamma_k <- max(sum_i r_ik (mu_ik^2 + d_k) / sum_i r_ik, 1e-10),
/// rho_k <- sum_i r_ik / N. A component with mass < 1e-12 either throws
/// EmptyComponent or is re-seeded from the observation with the lowest
/// mixture log-likelihood (its posterior second moment under its most
/// responsible component), with weight 1/N before renormalisation.
MStepResult csgmm_m_step(const EStepResult& e, const GammaMixture& current, const SensingProblem& p,
                         const Matrix& ys, EmptyComponentPolicy policy = EmptyComponentPolicy::Reseed);

struct EmTrace {
  std::vector<double> log_evidence;
  std::size_t iterations = 0;
  bool converged = false;
  std::size_t reseeds = 0;
};

struct CsgmmFitOptions {
  std::size_t components = 32;
  double tol = 1e-3;
  std::size_t max_iters = 500;
};

struct CsgmmFit {
  GammaMixture model;
  EmTrace trace;
};

/// Alternates e/m steps from `initial` until |delta log-evidence| < tol or
/// max_iters m-steps. The trace holds the evidence of every model visited.
CsgmmFit csgmm_fit(const SensingProblem& p, const Matrix& ys, GammaMixture initial, double tol,
                   std::size_t max_iters);
CsgmmFit csgmm_fit(const SensingProblem& p, const Matrix& ys, const CsgmmFitOptions& options, SeededRng& rng);

/// Coefficient ground truth: responsibilities from N(s_i; 0, diag gamma_k),
/// gamma_k <- sum_i r_ik s_i^2 / sum_i r_ik.
CsgmmFit csgmm_fit_coefficients(const Matrix& coefficients, const CsgmmFitOptions& options, SeededRng& rng);

/// Signal ground truth: compressed EM with Phi = D and a small noise variance.
CsgmmFit csgmm_fit_signals(std::shared_ptr<const Dictionary> dictionary, const Matrix& signals,
                           const CsgmmFitOptions& options, SeededRng& rng, double noise_var = 1e-8);

enum class Estimator { Cme, Map };

/// x = D sum_k p(k|y) mu_k (CME) or D mu_{argmax p(k|y)} (MAP), per column.
Matrix csgmm_estimate(const GammaMixture& model, const SensingProblem& p, const Matrix& ys, Estimator which);
Vector csgmm_estimate_cme(const GammaMixture& model, const SensingProblem& p, const Vector& y);
Vector csgmm_estimate_map(const GammaMixture& model, const SensingProblem& p, const Vector& y);

/// p(k|y) for one observation.
Vector csgmm_responsibilities(const GammaMixture& model, const SensingProblem& p, const Vector& y);

}  // namespace csbayes
