#pragma once

#include "csbayes/linalg.hpp"
#include "csbayes/problem.hpp"
#include "csbayes/sensing.hpp"

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace csbayes {

enum class LassoDomain { Pixel, Dictionary };

std::string to_string(LassoDomain d);
LassoDomain parse_lasso_domain(const std::string& name);

struct LassoConfig {
  double lambda = 0.1;
  LassoDomain domain = LassoDomain::Dictionary;
  std::size_t max_sweeps = 5000;
  double tol = 1e-10;  // max |coordinate change| per sweep
  bool record_objective = false;
};

struct LassoResult {
  Vector estimate;      // D s (dictionary) or s (pixel)
  Vector coefficients;  // s
  double objective = 0.0;
  std::size_t sweeps = 0;
  bool converged = false;
  std::vector<double> objective_trace;  // after each sweep, if requested
};

/// (1/(2M)) ||y - Phi s||^2 + lambda ||s||_1
double lasso_objective(const Matrix& phi, const Vector& y, const Vector& s, double lambda);

/// Cyclic coordinate descent with soft-thresholding. Column norms are
/// computed once per operator.
class LassoSolver {
 public:
  explicit LassoSolver(Matrix phi);

  const Matrix& phi() const noexcept { return phi_; }
  /// Returns coefficients only; `estimate` equals `coefficients`.
  LassoResult solve(const Vector& y, const LassoConfig& config) const;

 private:
  Matrix phi_;
  Vector col_sq_;
};

/// Pixel domain solves against the measurement matrix (requires the
/// problem to keep it); dictionary domain solves against Phi and maps back
/// through D.
LassoResult lasso_solve(const SensingProblem& p, const Vector& y, const LassoConfig& config);

/// One estimate per column of the set (dictionary domain), parallel over
/// observations.
Matrix lasso_reconstruct(const ObservationSet& set, const Dictionary& dictionary, const LassoConfig& config);
/// Either domain, using the bundle's measurement matrices.
Matrix lasso_reconstruct(const DatasetBundle& bundle, const Dictionary& dictionary, const LassoConfig& config);

struct LassoTuneResult {
  double lambda = 0.0;
  std::vector<double> scores;  // validation nMSE per candidate
};

/// Picks the candidate with the lowest score; ties go to the earliest
/// candidate. Throws EmptyInput.
LassoTuneResult lasso_tune(const std::vector<double>& candidates, const std::function<double(double)>& score);

}  // namespace csbayes
