#include "csbayes/audit.hpp"

#include "csbayes/posterior.hpp"

#include <cmath>

namespace csbayes {

namespace {

Vector draw_coefficients(const Vector& gamma, SeededRng& rng) {
  Vector s(gamma.size());
  for (Eigen::Index j = 0; j < s.size(); ++j) {
    do {
      s(j) = std::sqrt(gamma(j)) * rng.normal();
    } while (s(j) == 0.0);
  }
  return s;
}

void record(AuditReport& r, const Vector& weights, const Matrix& gammas, const Vector& s) {
  const double ratio = mixture_log_density(weights, gammas, s) - log_sparsity_bound(s);
  r.max_log_ratio = std::max(r.max_log_ratio, ratio);
  if (!check_sparsity_bound(weights, gammas, s)) ++r.violations;
  ++r.draws;
}

std::size_t pick_component(const Vector& weights, SeededRng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (Eigen::Index k = 0; k < weights.size(); ++k) {
    acc += weights(k);
    if (u < acc) return static_cast<std::size_t>(k);
  }
  return static_cast<std::size_t>(weights.size() - 1);
}

}  // namespace

AuditReport audit_sparsity_bound(const GammaMixture& model, std::size_t n_draws, SeededRng& rng) {
  validate_mixture(model);
  AuditReport r;
  for (std::size_t i = 0; i < n_draws; ++i) {
    const auto k = static_cast<Eigen::Index>(pick_component(model.weights, rng));
    record(r, model.weights, model.gammas, draw_coefficients(model.gammas.col(k), rng));
  }
  return r;
}

AuditReport audit_sparsity_bound(const VaeParams& model, std::size_t n_draws, SeededRng& rng) {
  AuditReport r;
  const Vector one = Vector::Ones(1);
  constexpr std::size_t kChunk = 256;
  for (std::size_t start = 0; start < n_draws; start += kChunk) {
    const std::size_t len = std::min(kChunk, n_draws - start);
    Matrix z(static_cast<Eigen::Index>(model.arch.latent_dim), static_cast<Eigen::Index>(len));
    for (Eigen::Index c = 0; c < z.cols(); ++c)
      for (Eigen::Index j = 0; j < z.rows(); ++j) z(j, c) = rng.normal();
    const Matrix gammas = decode(model, z);
    for (Eigen::Index c = 0; c < gammas.cols(); ++c) {
      record(r, one, gammas.col(c), draw_coefficients(gammas.col(c), rng));
    }
  }
  return r;
}

}  // namespace csbayes
