#include "csbayes/sbl.hpp"

#include "csbayes/error.hpp"
#include "csbayes/posterior.hpp"

#include <cmath>

namespace csbayes {

SblState sbl_init(const SensingProblem& p) {
  SblState s;
  s.gamma = Vector::Ones(p.s());
  return s;
}

SblState sbl_em_step(const SblState& state, const SensingProblem& p, const Vector& y) {
  const BatchPosterior post = posterior_batch(p, state.gamma, y);
  SblState next;
  next.iterations = state.iterations + 1;
  next.log_evidence = state.log_evidence;
  next.log_evidence.push_back(post.loglik(0));
  next.gamma = (post.means.col(0).cwiseAbs2() + post.diag_cov).cwiseMax(kEmGammaClamp);
  return next;
}

SblResult sbl_reconstruct(const SensingProblem& p, const Vector& y, std::size_t max_iters, double tol) {
  if (max_iters == 0) fail(ErrorCode::InvalidArgument, "sbl_reconstruct needs max_iters >= 1");
  SblState state = sbl_init(p);
  SblResult out;
  for (std::size_t it = 0; it < max_iters; ++it) {
    state = sbl_em_step(state, p, y);
    const auto& trace = state.log_evidence;
    if (trace.size() >= 2 && std::abs(trace.back() - trace[trace.size() - 2]) < tol) {
      out.converged = true;
      break;
    }
  }
  const BatchPosterior post = posterior_batch(p, state.gamma, y);
  out.coefficients = post.means.col(0);
  out.estimate = p.dictionary().synthesize(out.coefficients);
  out.gamma = state.gamma;
  out.log_evidence = std::move(state.log_evidence);
  out.iterations = state.iterations;
  return out;
}

}  // namespace csbayes
