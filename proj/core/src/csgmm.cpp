#include "csbayes/csgmm.hpp"

#include "csbayes/error.hpp"
#include "csbayes/parallel.hpp"
#include "csbayes/posterior.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace csbayes {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr double kEmptyMass = 1e-12;

std::vector<GammaFactor> factor_all(const GammaMixture& model, const SensingProblem& p) {
  std::vector<std::optional<GammaFactor>> slots(static_cast<std::size_t>(model.components()));
  parallel_for(slots.size(), [&](std::size_t k) {
    slots[k].emplace(factor_gamma(p, model.gammas.col(static_cast<Eigen::Index>(k))));
  });
  std::vector<GammaFactor> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

// Row-wise Bayes rule; fills responsibilities and per-row log normalisers.
void normalise_rows(const Matrix& logliks, const Vector& weights, Matrix& resp, Vector& row_lse) {
  const Vector log_w = weights.array().log().matrix();
  resp.resize(logliks.rows(), logliks.cols());
  row_lse.resize(logliks.rows());
  Vector joint(logliks.cols());
  for (Eigen::Index i = 0; i < logliks.rows(); ++i) {
    joint = logliks.row(i).transpose() + log_w;
    row_lse(i) = logsumexp(joint);
    resp.row(i) = (joint.array() - row_lse(i)).exp().matrix().transpose();
  }
}

void check_model(const GammaMixture& model, Eigen::Index s) {
  if (model.components() < 1) fail(ErrorCode::InvalidArgument, "mixture has no components");
  if (model.gammas.cols() != model.components()) fail(ErrorCode::DimensionMismatch, "mixture gamma/weight count differ");
  if (model.gammas.rows() != s) fail(ErrorCode::DimensionMismatch, "mixture dimension differs from S");
}

Eigen::Index worst_sample(const Vector& sample_loglik, const std::vector<Eigen::Index>& taken) {
  Eigen::Index best = -1;
  for (Eigen::Index i = 0; i < sample_loglik.size(); ++i) {
    bool used = false;
    for (auto t : taken) used = used || t == i;
    if (used) continue;
    if (best < 0 || sample_loglik(i) < sample_loglik(best)) best = i;
  }
  return best;
}

}  // namespace

GammaMixture init_mixture(std::size_t s, std::size_t k, SeededRng& rng) {
  if (k == 0) fail(ErrorCode::InvalidArgument, "mixture needs at least one component");
  GammaMixture m;
  m.weights = Vector::Constant(static_cast<Eigen::Index>(k), 1.0 / static_cast<double>(k));
  m.gammas.resize(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(k));
  const double lo = std::log(1e-2);
  const double hi = std::log(1.0);
  for (Eigen::Index c = 0; c < m.gammas.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.gammas.rows(); ++r) m.gammas(r, c) = std::exp(rng.uniform(lo, hi));
  }
  return m;
}

void validate_mixture(const GammaMixture& model) {
  if (model.components() < 1) fail(ErrorCode::InvalidArgument, "mixture has no components");
  if (model.gammas.cols() != model.components()) fail(ErrorCode::DimensionMismatch, "mixture gamma/weight count differ");
  if ((model.weights.array() < 0.0).any() || std::abs(model.weights.sum() - 1.0) > 1e-9) {
    fail(ErrorCode::InvalidArgument, "mixture weights must be non-negative and sum to 1");
  }
  if (!(model.gammas.array() > 0.0).all() || !model.gammas.allFinite()) {
    fail(ErrorCode::InvalidArgument, "mixture variances must be positive and finite");
  }
}

EStepResult csgmm_e_step(const GammaMixture& model, const SensingProblem& p, const Matrix& ys) {
  check_model(model, p.s());
  if (ys.cols() == 0) fail(ErrorCode::EmptyInput, "e-step needs at least one observation");
  const auto factors = factor_all(model, p);
  const auto k_count = model.components();

  EStepResult e;
  e.logliks.resize(ys.cols(), k_count);
  e.diag_cov.resize(p.s(), k_count);
  for (Eigen::Index k = 0; k < k_count; ++k) {
    e.logliks.col(k) = loglik_batch(factors[static_cast<std::size_t>(k)], ys);
    e.diag_cov.col(k) = factors[static_cast<std::size_t>(k)].diag_cov;
  }
  normalise_rows(e.logliks, model.weights, e.responsibilities, e.sample_loglik);
  e.log_evidence = e.sample_loglik.sum();

  e.weighted_second.resize(p.s(), k_count);
  e.masses = e.responsibilities.colwise().sum().transpose();
  parallel_for(static_cast<std::size_t>(k_count), [&](std::size_t ku) {
    const auto k = static_cast<Eigen::Index>(ku);
    const Matrix means = means_batch(p, factors[ku], ys);
    e.weighted_second.col(k) = means.cwiseAbs2() * e.responsibilities.col(k);
  });
  return e;
}

MStepResult csgmm_m_step(const EStepResult& e, const GammaMixture& current, const SensingProblem& p,
                         const Matrix& ys, EmptyComponentPolicy policy) {
  const auto k_count = e.masses.size();
  const auto n = static_cast<double>(e.responsibilities.rows());
  MStepResult out;
  out.model.weights.resize(k_count);
  out.model.gammas.resize(e.diag_cov.rows(), k_count);
  for (Eigen::Index k = 0; k < k_count; ++k) {
    const double mass = e.masses(k);
    if (mass < kEmptyMass) {
      if (policy == EmptyComponentPolicy::Throw) {
        fail(ErrorCode::EmptyComponent, "component " + std::to_string(k) + " has responsibility mass " +
                                            std::to_string(mass));
      }
      const Eigen::Index i = worst_sample(e.sample_loglik, out.reseeded);
      if (i < 0) fail(ErrorCode::EmptyComponent, "no observation left to re-seed component " + std::to_string(k));
      Eigen::Index owner = 0;
      e.responsibilities.row(i).maxCoeff(&owner);
      const GammaFactor f = factor_gamma(p, current.gammas.col(owner));
      const Vector mu = means_batch(p, f, ys.col(i));
      out.model.gammas.col(k) = (mu.cwiseAbs2() + f.diag_cov).cwiseMax(kEmGammaClamp);
      out.model.weights(k) = 1.0 / n;
      out.reseeded.push_back(i);
      continue;
    }
    out.model.gammas.col(k) = (e.weighted_second.col(k) / mass + e.diag_cov.col(k)).cwiseMax(kEmGammaClamp);
    out.model.weights(k) = mass / n;
  }
  out.model.weights /= out.model.weights.sum();
  return out;
}

CsgmmFit csgmm_fit(const SensingProblem& p, const Matrix& ys, GammaMixture initial, double tol,
                   std::size_t max_iters) {
  check_model(initial, p.s());
  CsgmmFit fit;
  fit.model = std::move(initial);
  EStepResult e = csgmm_e_step(fit.model, p, ys);
  fit.trace.log_evidence.push_back(e.log_evidence);
  for (std::size_t it = 0; it < max_iters; ++it) {
    MStepResult m = csgmm_m_step(e, fit.model, p, ys);
    fit.trace.reseeds += m.reseeded.size();
    fit.model = std::move(m.model);
    e = csgmm_e_step(fit.model, p, ys);
    const double prev = fit.trace.log_evidence.back();
    fit.trace.log_evidence.push_back(e.log_evidence);
    ++fit.trace.iterations;
    if (std::abs(e.log_evidence - prev) < tol) {
      fit.trace.converged = true;
      break;
    }
  }
  return fit;
}

CsgmmFit csgmm_fit(const SensingProblem& p, const Matrix& ys, const CsgmmFitOptions& options, SeededRng& rng) {
  return csgmm_fit(p, ys, init_mixture(static_cast<std::size_t>(p.s()), options.components, rng), options.tol,
                   options.max_iters);
}

CsgmmFit csgmm_fit_coefficients(const Matrix& coefficients, const CsgmmFitOptions& options, SeededRng& rng) {
  if (coefficients.cols() == 0) fail(ErrorCode::EmptyInput, "no coefficient vectors to fit");
  const auto s = coefficients.rows();
  const auto n = static_cast<double>(coefficients.cols());
  const Matrix sq = coefficients.cwiseAbs2();
  CsgmmFit fit;
  fit.model = init_mixture(static_cast<std::size_t>(s), options.components, rng);
  const auto k_count = fit.model.components();

  auto e_step = [&](Matrix& resp, Vector& row_lse) {
    Matrix logliks(coefficients.cols(), k_count);
    for (Eigen::Index k = 0; k < k_count; ++k) {
      const Vector g = floor_gamma(fit.model.gammas.col(k));
      const double log_norm = -0.5 * (static_cast<double>(s) * kLog2Pi + g.array().log().sum());
      logliks.col(k) = (log_norm - 0.5 * (g.cwiseInverse().transpose() * sq).array()).matrix().transpose();
    }
    normalise_rows(logliks, fit.model.weights, resp, row_lse);
    return row_lse.sum();
  };

  Matrix resp;
  Vector row_lse;
  fit.trace.log_evidence.push_back(e_step(resp, row_lse));
  for (std::size_t it = 0; it < options.max_iters; ++it) {
    const Vector masses = resp.colwise().sum().transpose();
    std::vector<Eigen::Index> reseeded;
    for (Eigen::Index k = 0; k < k_count; ++k) {
      if (masses(k) < kEmptyMass) {
        const Eigen::Index i = worst_sample(row_lse, reseeded);
        if (i < 0) fail(ErrorCode::EmptyComponent, "no sample left to re-seed a component");
        fit.model.gammas.col(k) = sq.col(i).cwiseMax(kEmGammaClamp);
        fit.model.weights(k) = 1.0 / n;
        reseeded.push_back(i);
        continue;
      }
      fit.model.gammas.col(k) = ((sq * resp.col(k)) / masses(k)).cwiseMax(kEmGammaClamp);
      fit.model.weights(k) = masses(k) / n;
    }
    fit.model.weights /= fit.model.weights.sum();
    fit.trace.reseeds += reseeded.size();
    const double prev = fit.trace.log_evidence.back();
    fit.trace.log_evidence.push_back(e_step(resp, row_lse));
    ++fit.trace.iterations;
    if (std::abs(fit.trace.log_evidence.back() - prev) < options.tol) {
      fit.trace.converged = true;
      break;
    }
  }
  return fit;
}

CsgmmFit csgmm_fit_signals(std::shared_ptr<const Dictionary> dictionary, const Matrix& signals,
                           const CsgmmFitOptions& options, SeededRng& rng, double noise_var) {
  const SensingProblem p = SensingProblem::identity_measurement(std::move(dictionary), noise_var);
  return csgmm_fit(p, signals, options, rng);
}

Matrix csgmm_estimate(const GammaMixture& model, const SensingProblem& p, const Matrix& ys, Estimator which) {
  check_model(model, p.s());
  const auto factors = factor_all(model, p);
  const auto k_count = model.components();
  Matrix logliks(ys.cols(), k_count);
  for (Eigen::Index k = 0; k < k_count; ++k) logliks.col(k) = loglik_batch(factors[static_cast<std::size_t>(k)], ys);
  Matrix resp;
  Vector row_lse;
  normalise_rows(logliks, model.weights, resp, row_lse);

  Matrix coeffs = Matrix::Zero(p.s(), ys.cols());
  if (which == Estimator::Cme) {
    for (Eigen::Index k = 0; k < k_count; ++k) {
      coeffs += means_batch(p, factors[static_cast<std::size_t>(k)], ys) * resp.col(k).asDiagonal();
    }
  } else {
    for (Eigen::Index i = 0; i < ys.cols(); ++i) {
      Eigen::Index best = 0;
      resp.row(i).maxCoeff(&best);
      coeffs.col(i) = means_batch(p, factors[static_cast<std::size_t>(best)], ys.col(i));
    }
  }
  return p.dictionary().matrix * coeffs;
}

Vector csgmm_estimate_cme(const GammaMixture& model, const SensingProblem& p, const Vector& y) {
  return csgmm_estimate(model, p, y, Estimator::Cme).col(0);
}

Vector csgmm_estimate_map(const GammaMixture& model, const SensingProblem& p, const Vector& y) {
  return csgmm_estimate(model, p, y, Estimator::Map).col(0);
}

Vector csgmm_responsibilities(const GammaMixture& model, const SensingProblem& p, const Vector& y) {
  check_model(model, p.s());
  Vector logliks(model.components());
  for (Eigen::Index k = 0; k < model.components(); ++k) {
    logliks(k) = marginal_loglik(observation_cov(p, model.gammas.col(k)), y);
  }
  return responsibilities(logliks, model.weights.array().log().matrix());
}

}  // namespace csbayes
