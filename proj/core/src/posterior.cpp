#include "csbayes/posterior.hpp"

#include "csbayes/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace csbayes {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

void check_gamma(const SensingProblem& p, const Vector& gamma) {
  if (gamma.size() != p.s()) {
    fail(ErrorCode::DimensionMismatch, "gamma has length " + std::to_string(gamma.size()) +
                                           ", problem has S = " + std::to_string(p.s()));
  }
}

void check_y(const SensingProblem& p, Eigen::Index rows) {
  if (rows != p.m()) fail(ErrorCode::DimensionMismatch, "observation length differs from M");
}

Vector diag_from_whitened(const Vector& gamma, const Matrix& whitened_phi) {
  Vector diag = gamma - gamma.cwiseAbs2().cwiseProduct(whitened_phi.colwise().squaredNorm().transpose());
  // cancellation can push tiny variances through zero
  for (Eigen::Index j = 0; j < diag.size(); ++j) diag(j) = std::max(diag(j), 1e-15 * gamma(j));
  return diag;
}

}  // namespace

Vector floor_gamma(const Vector& gamma) { return gamma.cwiseMax(kGammaFloor); }

double ObservationGaussian::loglik(const Vector& y) const { return marginal_loglik(*this, y); }

ObservationGaussian observation_cov(const SensingProblem& p, const Vector& gamma) {
  check_gamma(p, gamma);
  const Vector g = floor_gamma(gamma);
  const Matrix scaled = p.phi() * g.cwiseSqrt().asDiagonal();
  Matrix cov = Matrix::Zero(p.m(), p.m());
  cov.selfadjointView<Eigen::Lower>().rankUpdate(scaled);
  cov.triangularView<Eigen::StrictlyUpper>() = cov.transpose();
  cov.diagonal().array() += p.noise_var();
  PsdFactorization f = cholesky(cov);
  return ObservationGaussian{std::move(cov), std::move(f)};
}

double marginal_loglik(const ObservationGaussian& obs, const Vector& y) {
  if (y.size() != obs.dim()) fail(ErrorCode::DimensionMismatch, "observation length differs from covariance");
  const Matrix w = obs.factor.solve_lower(y);
  return -0.5 * (static_cast<double>(y.size()) * kLog2Pi + obs.factor.logdet() + w.squaredNorm());
}

double logdet_posterior_cov(const SensingProblem& p, const Vector& gamma, const ObservationGaussian& obs) {
  check_gamma(p, gamma);
  if (!(p.noise_var() > 0.0)) fail(ErrorCode::InvalidArgument, "logdet_posterior_cov needs noise_var > 0");
  return static_cast<double>(p.m()) * std::log(p.noise_var()) - obs.factor.logdet() +
         floor_gamma(gamma).array().log().sum();
}

ConditionalPosterior posterior_moments_fast(const SensingProblem& p, const Vector& gamma,
                                            const ObservationGaussian& obs, const Vector& y) {
  check_gamma(p, gamma);
  check_y(p, y.size());
  const Vector g = floor_gamma(gamma);
  const Matrix whitened = obs.factor.solve_lower(p.phi());
  ConditionalPosterior out;
  out.mean = g.cwiseProduct(p.phi().transpose() * obs.factor.solve(y));
  out.diag_cov = diag_from_whitened(g, whitened);
  out.logdet = p.noise_var() > 0.0 ? logdet_posterior_cov(p, g, obs)
                                   : -std::numeric_limits<double>::infinity();
  return out;
}

ConditionalPosterior posterior_moments_fast(const SensingProblem& p, const Vector& gamma, const Vector& y) {
  return posterior_moments_fast(p, gamma, observation_cov(p, gamma), y);
}

GammaFactor factor_gamma(const SensingProblem& p, const Vector& gamma) {
  check_gamma(p, gamma);
  GammaFactor f{floor_gamma(gamma), observation_cov(p, gamma), Matrix(), Vector(), 0.0};
  f.whitened_phi = f.obs.factor.solve_lower(p.phi());
  f.diag_cov = diag_from_whitened(f.gamma, f.whitened_phi);
  f.logdet = p.noise_var() > 0.0 ? logdet_posterior_cov(p, f.gamma, f.obs)
                                 : -std::numeric_limits<double>::infinity();
  return f;
}

Vector loglik_batch(const GammaFactor& f, const Matrix& ys) {
  if (ys.rows() != f.obs.dim()) fail(ErrorCode::DimensionMismatch, "observation length differs from M");
  const double logdet_y = f.obs.factor.logdet();
  const Matrix white_y = f.obs.factor.solve_lower(ys);
  const double m = static_cast<double>(ys.rows());
  Vector out(ys.cols());
  for (Eigen::Index b = 0; b < ys.cols(); ++b) {
    out(b) = -0.5 * (m * kLog2Pi + logdet_y + white_y.col(b).squaredNorm());
  }
  return out;
}

Matrix means_batch(const SensingProblem& p, const GammaFactor& f, const Matrix& ys) {
  check_y(p, ys.rows());
  return f.gamma.asDiagonal() * (p.phi().transpose() * f.obs.factor.solve(ys));
}

Vector posterior_mean(const SensingProblem& p, const Vector& gamma, const Vector& y) {
  check_gamma(p, gamma);
  check_y(p, y.size());
  const Vector g = floor_gamma(gamma);
  const ObservationGaussian obs = observation_cov(p, g);
  return g.cwiseProduct(p.phi().transpose() * obs.factor.solve(y));
}

BatchPosterior posterior_batch(const SensingProblem& p, const Vector& gamma, const Matrix& ys) {
  check_y(p, ys.rows());
  const GammaFactor f = factor_gamma(p, gamma);
  BatchPosterior out;
  out.means = means_batch(p, f, ys);
  out.diag_cov = f.diag_cov;
  out.logdet = f.logdet;
  out.loglik = loglik_batch(f, ys);
  return out;
}

ConditionalPosterior posterior_moments_reference(const SensingProblem& p, const Vector& gamma,
                                                 const Vector& y) {
  check_gamma(p, gamma);
  check_y(p, y.size());
  if (!(p.noise_var() > 0.0)) fail(ErrorCode::NotPositiveDefinite, "reference posterior needs noise_var > 0");
  const Vector g = floor_gamma(gamma);
  Matrix precision = p.phi().transpose() * p.phi() / p.noise_var();
  precision.diagonal() += g.cwiseInverse();
  precision = 0.5 * (precision + precision.transpose());
  const PsdFactorization f = cholesky(precision);
  const auto s = p.s();
  ConditionalPosterior out;
  Matrix cov = f.solve(Matrix(Matrix::Identity(s, s)));
  cov = 0.5 * (cov + cov.transpose());
  out.mean = cov * (p.phi().transpose() * y) / p.noise_var();
  out.diag_cov = cov.diagonal();
  out.logdet = -f.logdet();
  out.full_cov = std::move(cov);
  return out;
}

ConditionalPosterior posterior_moments_noisefree(const SensingProblem& p, const Vector& gamma,
                                                 const Vector& y) {
  check_gamma(p, gamma);
  check_y(p, y.size());
  const Vector g = floor_gamma(gamma);
  const Vector root = g.cwiseSqrt();
  const Matrix scaled = p.phi() * root.asDiagonal();
  const Matrix pinv = Eigen::CompleteOrthogonalDecomposition<Matrix>(scaled).pseudoInverse();
  const auto s = p.s();

  ConditionalPosterior out;
  out.mean = root.cwiseProduct(pinv * y);
  Matrix cov = (Matrix::Identity(s, s) - root.asDiagonal() * pinv * p.phi()) * g.asDiagonal();
  cov = 0.5 * (cov + cov.transpose());
  out.diag_cov = cov.diagonal();
  out.logdet = -std::numeric_limits<double>::infinity();
  out.full_cov = std::move(cov);
  return out;
}

double trace_phi_cov(const SensingProblem& p, const Vector& gamma, const Vector& diag_cov) {
  check_gamma(p, gamma);
  const Vector g = floor_gamma(gamma);
  return p.noise_var() * (static_cast<double>(p.s()) - diag_cov.cwiseQuotient(g).sum());
}

Vector responsibilities(const Vector& logliks, const Vector& log_weights) {
  if (logliks.size() != log_weights.size()) fail(ErrorCode::DimensionMismatch, "responsibilities length mismatch");
  const Vector joint = logliks + log_weights;
  const double norm = logsumexp(joint);
  return (joint.array() - norm).exp().matrix();
}

double mixture_log_density(const Vector& weights, const Matrix& gammas, const Vector& s) {
  if (weights.size() != gammas.cols() || gammas.rows() != s.size()) {
    fail(ErrorCode::DimensionMismatch, "mixture_log_density shape mismatch");
  }
  Vector terms(weights.size());
  const Vector s2 = s.cwiseAbs2();
  for (Eigen::Index k = 0; k < weights.size(); ++k) {
    const Vector g = floor_gamma(gammas.col(k));
    const double log_pdf =
        -0.5 * (static_cast<double>(s.size()) * kLog2Pi + g.array().log().sum() + s2.cwiseQuotient(g).sum());
    terms(k) = (weights(k) > 0.0 ? std::log(weights(k)) : -std::numeric_limits<double>::infinity()) + log_pdf;
  }
  return logsumexp(terms);
}

double log_sparsity_bound(const Vector& s) {
  constexpr double kLog2PiE = kLog2Pi + 1.0;
  double acc = 0.0;
  for (Eigen::Index j = 0; j < s.size(); ++j) {
    if (s(j) == 0.0) fail(ErrorCode::ZeroCoordinate, "coordinate " + std::to_string(j) + " is zero");
    acc += -0.5 * kLog2PiE - std::log(std::abs(s(j)));
  }
  return acc;
}

bool check_sparsity_bound(const Vector& weights, const Matrix& gammas, const Vector& s) {
  const double bound = log_sparsity_bound(s);
  const double density = mixture_log_density(weights, gammas, s);
  return density <= bound + 1e-12 * std::max(1.0, std::abs(bound));
}

}  // namespace csbayes
