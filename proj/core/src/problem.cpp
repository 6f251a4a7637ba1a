#include "csbayes/problem.hpp"

#include "csbayes/error.hpp"

#include <cmath>

namespace csbayes {

namespace {

void check_noise(double noise_var) {
  if (!(noise_var >= 0.0) || !std::isfinite(noise_var)) {
    fail(ErrorCode::InvalidArgument, "noise variance must be finite and non-negative");
  }
}

}  // namespace

SensingProblem::SensingProblem(const Matrix& measurement, std::shared_ptr<const Dictionary> dictionary,
                               double noise_var, bool keep_measurement)
    : dictionary_(std::move(dictionary)), noise_var_(noise_var) {
  if (!dictionary_) fail(ErrorCode::InvalidArgument, "sensing problem needs a dictionary");
  if (measurement.cols() != dictionary_->signal_dim()) {
    fail(ErrorCode::DimensionMismatch, "measurement columns differ from dictionary rows");
  }
  check_noise(noise_var);
  phi_ = measurement * dictionary_->matrix;
  if (keep_measurement) measurement_ = std::make_shared<const Matrix>(measurement);
}

SensingProblem SensingProblem::identity_measurement(std::shared_ptr<const Dictionary> dictionary,
                                                    double noise_var) {
  if (!dictionary) fail(ErrorCode::InvalidArgument, "sensing problem needs a dictionary");
  check_noise(noise_var);
  SensingProblem p;
  p.phi_ = dictionary->matrix;
  p.dictionary_ = std::move(dictionary);
  p.noise_var_ = noise_var;
  return p;
}

const Matrix& SensingProblem::measurement() const {
  if (!measurement_) fail(ErrorCode::InvalidArgument, "measurement matrix was not kept for this problem");
  return *measurement_;
}

SensingProblem SensingProblem::with_noise_var(double noise_var) const {
  check_noise(noise_var);
  SensingProblem p = *this;
  p.noise_var_ = noise_var;
  return p;
}

}  // namespace csbayes
