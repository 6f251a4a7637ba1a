#pragma once

#include "csbayes/linalg.hpp"
#include "csbayes/problem.hpp"

#include <cstddef>
#include <vector>

namespace csbayes {

struct SblState {
  Vector gamma;
  std::size_t iterations = 0;
  /// log N(y; 0, C_y) of the gamma each step started from.
  std::vector<double> log_evidence;
};

/// gamma = 1 for every coordinate.
SblState sbl_init(const SensingProblem& p);

/// One EM update gamma_j <- max(mu_j^2 + diag_cov_j, 1e-10); records the
/// log-evidence of the incoming gamma.
SblState sbl_em_step(const SblState& state, const SensingProblem& p, const Vector& y);

struct SblResult {
  Vector estimate;      // D mu at the final gamma
  Vector coefficients;  // mu
  Vector gamma;
  std::vector<double> log_evidence;
  std::size_t iterations = 0;
  bool converged = false;
};

/// EM until |delta log-evidence| < tol or max_iters steps. Throws
/// InvalidArgument for max_iters == 0.
SblResult sbl_reconstruct(const SensingProblem& p, const Vector& y, std::size_t max_iters = 200,
                          double tol = 1e-3);

}  // namespace csbayes
