#include "csbayes/lasso.hpp"

#include "csbayes/error.hpp"
#include "csbayes/parallel.hpp"

#include <cmath>
#include <limits>
#include <optional>

namespace csbayes {

namespace {

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

}  // namespace

std::string to_string(LassoDomain d) { return d == LassoDomain::Pixel ? "pixel" : "dictionary"; }

LassoDomain parse_lasso_domain(const std::string& name) {
  if (name == "pixel") return LassoDomain::Pixel;
  if (name == "dictionary" || name == "wavelet") return LassoDomain::Dictionary;
  fail(ErrorCode::InvalidArgument, "unknown lasso domain '" + name + "'");
}

double lasso_objective(const Matrix& phi, const Vector& y, const Vector& s, double lambda) {
  const double m = static_cast<double>(phi.rows());
  return (y - phi * s).squaredNorm() / (2.0 * m) + lambda * s.lpNorm<1>();
}

LassoSolver::LassoSolver(Matrix phi) : phi_(std::move(phi)) {
  if (phi_.size() == 0) fail(ErrorCode::EmptyInput, "lasso operator is empty");
  col_sq_ = phi_.colwise().squaredNorm().transpose();
}

LassoResult LassoSolver::solve(const Vector& y, const LassoConfig& config) const {
  if (!(config.lambda >= 0.0) || !std::isfinite(config.lambda)) {
    fail(ErrorCode::InvalidArgument, "lasso lambda must be finite and >= 0");
  }
  if (y.size() != phi_.rows()) fail(ErrorCode::DimensionMismatch, "lasso observation length differs from operator rows");
  const double m = static_cast<double>(phi_.rows());
  const double threshold = m * config.lambda;
  const Eigen::Index cols = phi_.cols();

  LassoResult out;
  Vector s = Vector::Zero(cols);
  Vector residual = y;
  for (std::size_t sweep = 0; sweep < config.max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (col_sq_(j) == 0.0) continue;
      const double old = s(j);
      const double rho = phi_.col(j).dot(residual) + col_sq_(j) * old;
      const double next = soft_threshold(rho, threshold) / col_sq_(j);
      if (next != old) {
        residual.noalias() -= (next - old) * phi_.col(j);
        s(j) = next;
        max_change = std::max(max_change, std::abs(next - old));
      }
    }
    out.sweeps = sweep + 1;
    if (config.record_objective) out.objective_trace.push_back(lasso_objective(phi_, y, s, config.lambda));
    if (max_change < config.tol) {
      out.converged = true;
      break;
    }
  }
  out.objective = lasso_objective(phi_, y, s, config.lambda);
  out.coefficients = s;
  out.estimate = std::move(s);
  return out;
}

LassoResult lasso_solve(const SensingProblem& p, const Vector& y, const LassoConfig& config) {
  if (config.domain == LassoDomain::Pixel) return LassoSolver(p.measurement()).solve(y, config);
  LassoResult r = LassoSolver(p.phi()).solve(y, config);
  r.estimate = p.dictionary().synthesize(r.coefficients);
  return r;
}

Matrix lasso_reconstruct(const ObservationSet& set, const Dictionary& dictionary, const LassoConfig& config) {
  if (config.domain != LassoDomain::Dictionary) {
    fail(ErrorCode::InvalidArgument, "observation sets carry Phi only; pixel-domain lasso needs the bundle");
  }
  const std::size_t n = set.count();
  Matrix out(static_cast<Eigen::Index>(dictionary.signal_dim()), static_cast<Eigen::Index>(n));
  std::optional<LassoSolver> shared;
  if (set.shared()) shared.emplace(set.problem(0).phi());
  parallel_for(n, [&](std::size_t i) {
    const auto col = static_cast<Eigen::Index>(i);
    const Vector y = set.observations.col(col);
    const LassoResult r = shared ? shared->solve(y, config) : LassoSolver(set.problem(i).phi()).solve(y, config);
    out.col(col) = dictionary.synthesize(r.coefficients);
  });
  return out;
}

Matrix lasso_reconstruct(const DatasetBundle& bundle, const Dictionary& dictionary, const LassoConfig& config) {
  const std::size_t n = bundle.count();
  const bool pixel = config.domain == LassoDomain::Pixel;
  auto op = [&](const Matrix& a) { return pixel ? a : Matrix(a * dictionary.matrix); };
  Matrix out(static_cast<Eigen::Index>(dictionary.signal_dim()), static_cast<Eigen::Index>(n));
  std::optional<LassoSolver> shared;
  if (bundle.mode == MatrixMode::Shared) shared.emplace(op(bundle.shared_measurement));
  parallel_for(n, [&](std::size_t i) {
    const auto col = static_cast<Eigen::Index>(i);
    const Vector y = bundle.observations.col(col);
    const LassoResult r = shared ? shared->solve(y, config) : LassoSolver(op(bundle.measurement(i))).solve(y, config);
    out.col(col) = pixel ? r.coefficients : dictionary.synthesize(r.coefficients);
  });
  return out;
}

LassoTuneResult lasso_tune(const std::vector<double>& candidates, const std::function<double(double)>& score) {
  if (candidates.empty()) fail(ErrorCode::EmptyInput, "lasso_tune needs at least one candidate");
  LassoTuneResult out;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double v = score(candidates[i]);
    out.scores.push_back(v);
    if (i == 0 || v < best) {
      best = v;
      out.lambda = candidates[i];
    }
  }
  return out;
}

}  // namespace csbayes
