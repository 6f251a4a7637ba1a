#pragma once

#include "csbayes/adam.hpp"
#include "csbayes/autodiff.hpp"
#include "csbayes/linalg.hpp"
#include "csbayes/problem.hpp"
#include "csbayes/rng.hpp"
#include "csbayes/sensing.hpp"

#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <vector>

namespace csbayes {

/// Lower bound added after the decoder softplus.
inline constexpr double kDecoderFloor = 1e-6;

struct VaeArchitecture {
  std::size_t input_dim = 0;
  std::size_t latent_dim = 16;
  std::size_t coeff_dim = 0;
  std::size_t encoder_hidden[2] = {0, 0};
  std::size_t decoder_hidden[2] = {0, 0};

  /// Hidden widths step linearly from the layer input width to `width_cap`
  /// over the two hidden layers.
  static VaeArchitecture make(std::size_t input_dim, std::size_t latent_dim, std::size_t coeff_dim,
                              std::size_t width_cap);
};

/// Encoder: input -> ReLU -> ReLU -> linear (mu, log sigma^2).
/// Decoder: z -> ReLU -> ReLU -> linear -> softplus + 1e-6 = gamma.
struct VaeParams {
  VaeArchitecture arch;
  EncoderInput input_mode = EncoderInput::Raw;
  /// enc.w1 enc.b1 enc.w2 enc.b2 enc.w3 enc.b3 dec.w1 dec.b1 dec.w2 dec.b2 dec.w3 dec.b3
  std::vector<Parameter> layers;

  std::vector<Parameter*> parameters();
  std::size_t parameter_count() const;
  void zero_grad();
};

/// Weights U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
VaeParams init_vae(const VaeArchitecture& arch, EncoderInput mode, SeededRng& rng);

/// Zero weights and biases everywhere (deterministic reference network).
VaeParams zero_vae(const VaeArchitecture& arch, EncoderInput mode);

struct EncoderOutput {
  Matrix mean;     // N_L x B
  Matrix log_var;  // N_L x B
  Matrix variance() const { return log_var.array().exp().matrix(); }
};

/// Throws ShapeMismatch when inputs.rows() differs from the input width.
EncoderOutput encode(const VaeParams& params, const Matrix& inputs);
/// gamma per column; strictly positive.
Matrix decode(const VaeParams& params, const Matrix& latents);
/// mu + sqrt(var) * eps with eps ~ N(0, I) drawn column by column.
Matrix reparameterize(const Matrix& mean, const Matrix& variance, SeededRng& rng);

struct ElboBreakdown {
  double reconstruction = 0.0;
  double kl_latent = 0.0;     // KL(q(z|y) || N(0, I))
  double kl_posterior = 0.0;  // KL(p(s|z,y) || p(s|z))
  double total = 0.0;
};

/// Reconstruction and posterior-KL terms for one gamma, M x M route only.
struct EvidenceTerms {
  double reconstruction = 0.0;
  double kl_posterior = 0.0;
};
EvidenceTerms evidence_terms(const SensingProblem& p, const Vector& gamma, const Vector& y);

/// 1/2 sum(mu^2 + var - 1 - log var)
double kl_standard_normal(const Vector& mean, const Vector& variance);

/// Single-sample ELBO at the given latent draw. `encoder_input` feeds the
/// encoder (y or its least-squares embedding), `y` is the observation.
ElboBreakdown elbo_sample(const VaeParams& params, const SensingProblem& p, const Vector& encoder_input,
                          const Vector& y, const Vector& latent);

/// What the decoder's gamma is scored against.
enum class TrainObjective {
  Evidence,      // log N(target; 0, Phi diag(gamma) Phi^T + sigma^2 I), target = y (or x with Phi = D)
  Coefficients,  // log N(target; 0, diag(gamma)), target = s
};

struct TrainConfig {
  double learning_rate = 2e-5;
  std::size_t batch_size = 64;
  std::size_t patience = 5;
  std::size_t max_epochs = 200;
  std::size_t max_lr_halvings = 1;
  std::uint64_t seed = 0;
  TrainObjective objective = TrainObjective::Evidence;
};

/// Sum over columns of the chosen objective minus KL(q || p) for fixed
/// latent noise; records the graph on `tape` and returns the scalar node.
Var elbo_on_tape(Tape& tape, VaeParams& params, const ObservationSet& data, const std::vector<std::size_t>& idx,
                 const Matrix& noise, TrainObjective objective);

/// Mean per-sample ELBO over `data` with noise drawn from `seed`.
double mean_elbo(VaeParams& params, const ObservationSet& data, std::uint64_t seed, TrainObjective objective);

/// One pass over shuffled mini-batches (without replacement). Returns the
/// mean per-sample ELBO of the batches seen. Throws NonFiniteLoss.
double train_epoch(VaeParams& params, AdamState& adam, const TrainConfig& config, const ObservationSet& data,
                   SeededRng& rng);

/// Learning-rate plateau logic: a window of `patience` consecutive
/// non-improving epochs halves the rate (up to max_halvings times); the
/// next full window stops training.
class PlateauSchedule {
 public:
  enum class Action { Continue, HalveRate, Stop };

  PlateauSchedule(std::size_t patience, std::size_t max_halvings)
      : patience_(patience), max_halvings_(max_halvings) {}

  Action observe(double value);
  bool improved_last() const noexcept { return improved_; }
  double best() const noexcept { return best_; }
  std::size_t halvings() const noexcept { return halvings_; }

 private:
  std::size_t patience_;
  std::size_t max_halvings_;
  std::size_t halvings_ = 0;
  std::size_t stale_ = 0;
  bool improved_ = false;
  double best_ = -std::numeric_limits<double>::infinity();
};

struct TrainHistory {
  std::vector<double> train_elbo;
  std::vector<double> val_elbo;
  std::vector<double> learning_rate;
  std::size_t best_epoch = 0;
  std::size_t halvings = 0;
  bool stopped_on_plateau = false;
};

/// Trains with Adam, evaluating validation ELBO after each epoch with a
/// fixed noise seed; returns the best-validation parameters in `params`.
TrainHistory fit(VaeParams& params, const TrainConfig& config, const ObservationSet& train,
                 const ObservationSet& validation);

/// Ground-truth coefficient pairs (s_i, y_i): `coefficients` holds s (S x count).
TrainHistory fit_coefficients(VaeParams& params, TrainConfig config, const Matrix& encoder_inputs,
                              const Matrix& coefficients, const Matrix& val_inputs, const Matrix& val_coefficients);

/// Ground-truth signal pairs (x_i, y_i): evidence objective with Phi = D.
TrainHistory fit_signals(VaeParams& params, TrainConfig config, std::shared_ptr<const Dictionary> dictionary,
                         const Matrix& encoder_inputs, const Matrix& signals, const Matrix& val_inputs,
                         const Matrix& val_signals, double noise_var = 1e-8);

/// D * mean over n_samples latent draws of the conditional posterior mean.
Vector csvae_estimate_cme(const VaeParams& params, const SensingProblem& p, const Vector& encoder_input,
                          const Vector& y, std::size_t n_samples, SeededRng& rng);
/// D * posterior mean at z = mu_phi(y).
Vector csvae_estimate_map(const VaeParams& params, const SensingProblem& p, const Vector& encoder_input,
                          const Vector& y);

/// 1/2 sum_j log(2 pi e sigma_j^2) of the encoder distribution.
double latent_entropy(const VaeParams& params, const Vector& encoder_input);

}  // namespace csbayes
