#include "csbayes/adam.hpp"

#include "csbayes/error.hpp"

#include <cmath>

namespace csbayes {

AdamState make_adam(const std::vector<Parameter*>& params, double learning_rate) {
  AdamState s;
  s.learning_rate = learning_rate;
  for (const auto* p : params) {
    s.first_moment.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    s.second_moment.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  }
  return s;
}

void adam_step(AdamState& state, const std::vector<Parameter*>& params) {
  if (params.size() != state.first_moment.size() || params.size() != state.second_moment.size()) {
    fail(ErrorCode::ShapeMismatch, "adam_step: parameter count differs from state");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = *params[i];
    if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols() ||
        state.first_moment[i].rows() != p.value.rows() || state.first_moment[i].cols() != p.value.cols()) {
      fail(ErrorCode::ShapeMismatch, "adam_step: buffer shape differs for " + p.name);
    }
    if (!p.grad.allFinite()) fail(ErrorCode::NonFiniteGradient, "non-finite gradient in " + p.name);
  }

  ++state.steps;
  const double t = static_cast<double>(state.steps);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = *params[i];
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    m = state.beta1 * m + (1.0 - state.beta1) * p.grad;
    v = state.beta2 * v + (1.0 - state.beta2) * p.grad.cwiseAbs2();
    p.value.array() -= state.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + state.epsilon);
  }
}

}  // namespace csbayes
