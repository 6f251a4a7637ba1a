#pragma once

#include "csbayes/csgmm.hpp"
#include "csbayes/csvae.hpp"
#include "csbayes/rng.hpp"

#include <cstddef>
#include <limits>

namespace csbayes {

struct AuditReport {
  std::size_t draws = 0;
  std::size_t violations = 0;
  /// Largest log(density / bound) seen; <= 0 when every draw respects the bound.
  double max_log_ratio = -std::numeric_limits<double>::infinity();
};

/// Draws k ~ weights, s ~ N(0, diag gamma_k) and checks the full mixture
/// density at s against prod_j (2 pi e)^{-1/2} / |s_j|.
AuditReport audit_sparsity_bound(const GammaMixture& model, std::size_t n_draws, SeededRng& rng);

/// Draws z ~ N(0, I), s ~ N(0, diag gamma(z)) and checks the conditional
/// prior density at s.
AuditReport audit_sparsity_bound(const VaeParams& model, std::size_t n_draws, SeededRng& rng);

}  // namespace csbayes
