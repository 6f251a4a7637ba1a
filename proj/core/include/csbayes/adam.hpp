#pragma once

#include "csbayes/autodiff.hpp"

#include <cstdint>
#include <vector>

namespace csbayes {

struct AdamState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t steps = 0;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
};

AdamState make_adam(const std::vector<Parameter*>& params, double learning_rate);

/// One bias-corrected Adam update of every parameter from its grad field.
/// Throws NonFiniteGradient (state and parameters untouched) and
/// ShapeMismatch when the moment buffers do not match.
void adam_step(AdamState& state, const std::vector<Parameter*>& params);

}  // namespace csbayes
