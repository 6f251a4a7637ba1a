#include "csbayes/csvae.hpp"

#include "csbayes/error.hpp"
#include "csbayes/parallel.hpp"
#include "csbayes/posterior.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace csbayes {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr std::size_t kEncoderOffset = 0;
constexpr std::size_t kDecoderOffset = 6;
constexpr std::uint64_t kNoiseStream = 0xE1B0;

std::size_t step_width(std::size_t from, std::size_t cap) {
  const double mid = static_cast<double>(from) + (static_cast<double>(cap) - static_cast<double>(from)) / 2.0;
  return static_cast<std::size_t>(std::lround(mid));
}

Parameter make_layer(const std::string& name, std::size_t rows, std::size_t cols) {
  return Parameter(name, Matrix::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)));
}

std::vector<Parameter> make_layers(const VaeArchitecture& a) {
  const std::size_t enc_out = 2 * a.latent_dim;
  return {
      make_layer("enc.w1", a.encoder_hidden[0], a.input_dim),
      make_layer("enc.b1", a.encoder_hidden[0], 1),
      make_layer("enc.w2", a.encoder_hidden[1], a.encoder_hidden[0]),
      make_layer("enc.b2", a.encoder_hidden[1], 1),
      make_layer("enc.w3", enc_out, a.encoder_hidden[1]),
      make_layer("enc.b3", enc_out, 1),
      make_layer("dec.w1", a.decoder_hidden[0], a.latent_dim),
      make_layer("dec.b1", a.decoder_hidden[0], 1),
      make_layer("dec.w2", a.decoder_hidden[1], a.decoder_hidden[0]),
      make_layer("dec.b2", a.decoder_hidden[1], 1),
      make_layer("dec.w3", a.coeff_dim, a.decoder_hidden[1]),
      make_layer("dec.b3", a.coeff_dim, 1),
  };
}

Var mlp(Tape& t, std::vector<Parameter>& layers, std::size_t offset, Var x) {
  Var h = t.relu(t.affine(t.parameter(layers[offset]), x, t.parameter(layers[offset + 1])));
  h = t.relu(t.affine(t.parameter(layers[offset + 2]), h, t.parameter(layers[offset + 3])));
  return t.affine(t.parameter(layers[offset + 4]), h, t.parameter(layers[offset + 5]));
}

struct EncoderVars {
  Var mean;
  Var log_var;
};

EncoderVars encoder_on_tape(Tape& t, VaeParams& params, const Matrix& inputs) {
  if (static_cast<std::size_t>(inputs.rows()) != params.arch.input_dim) {
    fail(ErrorCode::ShapeMismatch, "encoder expects " + std::to_string(params.arch.input_dim) + " inputs, got " +
                                       std::to_string(inputs.rows()));
  }
  const Var out = mlp(t, params.layers, kEncoderOffset, t.constant(inputs));
  const auto l = static_cast<Eigen::Index>(params.arch.latent_dim);
  return {t.rows(out, 0, l), t.rows(out, l, l)};
}

Var decoder_on_tape(Tape& t, VaeParams& params, Var latents) {
  return t.add_scalar(t.softplus(mlp(t, params.layers, kDecoderOffset, latents)), kDecoderFloor);
}

// sum_b log N(target_b; 0, Phi_b diag(gamma_b) Phi_b^T + sigma^2 I), with
// d/dgamma_j = 1/2 ((phi_j^T C^{-1} y)^2 - phi_j^T C^{-1} phi_j).
Var evidence_on_tape(Tape& t, Var gamma, const ObservationSet& data, const std::vector<std::size_t>& idx) {
  const Matrix& g = t.value(gamma);
  if (!all_finite(g)) fail(ErrorCode::NonFiniteLoss, "decoder produced non-finite variances");
  const auto batch = static_cast<Eigen::Index>(idx.size());
  Matrix grad(g.rows(), batch);
  std::vector<double> ll(idx.size());
  parallel_for(idx.size(), [&](std::size_t b) {
    const auto col = static_cast<Eigen::Index>(b);
    const SensingProblem& p = data.problem(idx[b]);
    const Vector y = data.observations.col(static_cast<Eigen::Index>(idx[b]));
    if (!all_finite(y)) fail(ErrorCode::NonFiniteLoss, "non-finite observation " + std::to_string(idx[b]));
    const GammaFactor f = factor_gamma(p, g.col(col));
    const Vector white_y = f.obs.factor.solve_lower(y);
    ll[b] = -0.5 * (static_cast<double>(p.m()) * kLog2Pi + f.obs.factor.logdet() + white_y.squaredNorm());
    const Vector proj = f.whitened_phi.transpose() * white_y;
    grad.col(col) = 0.5 * (proj.cwiseAbs2() - f.whitened_phi.colwise().squaredNorm().transpose());
  });
  Matrix value(1, 1);
  value(0, 0) = std::accumulate(ll.begin(), ll.end(), 0.0);
  return t.custom({gamma}, std::move(value), [gamma, grad = std::move(grad)](Tape& tt, const Matrix& up) {
    tt.accumulate(gamma, up(0, 0) * grad);
  });
}

// sum_b log N(s_b; 0, diag(gamma_b)), d/dgamma = 1/2 (s^2 / gamma^2 - 1 / gamma).
Var coefficient_loglik_on_tape(Tape& t, Var gamma, const Matrix& targets) {
  const Matrix& g = t.value(gamma);
  if (g.rows() != targets.rows() || g.cols() != targets.cols()) {
    fail(ErrorCode::ShapeMismatch, "coefficient targets differ from decoder output shape");
  }
  if (!all_finite(g) || !all_finite(targets)) fail(ErrorCode::NonFiniteLoss, "non-finite variances or targets");
  const Matrix sq = targets.cwiseAbs2();
  const Matrix inv = g.cwiseInverse();
  Matrix value(1, 1);
  value(0, 0) = -0.5 * (static_cast<double>(g.size()) * kLog2Pi + g.array().log().sum() + sq.cwiseProduct(inv).sum());
  Matrix grad = 0.5 * (sq.cwiseProduct(inv.cwiseAbs2()) - inv);
  return t.custom({gamma}, std::move(value), [gamma, grad = std::move(grad)](Tape& tt, const Matrix& up) {
    tt.accumulate(gamma, up(0, 0) * grad);
  });
}

Matrix gather_columns(const Matrix& m, const std::vector<std::size_t>& idx) {
  Matrix out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = m.col(static_cast<Eigen::Index>(idx[j]));
  return out;
}

Matrix draw_noise(std::size_t rows, std::size_t cols, SeededRng& rng) {
  Matrix e(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index c = 0; c < e.cols(); ++c)
    for (Eigen::Index r = 0; r < e.rows(); ++r) e(r, c) = rng.normal();
  return e;
}

void check_finite(double value, const std::string& where) {
  if (!std::isfinite(value)) fail(ErrorCode::NonFiniteLoss, "non-finite ELBO " + where);
}

ObservationSet wrap_targets(const Matrix& inputs, const Matrix& targets, std::shared_ptr<const SensingProblem> p) {
  if (inputs.cols() != targets.cols()) fail(ErrorCode::DimensionMismatch, "inputs and targets differ in count");
  ObservationSet set;
  set.encoder_inputs = inputs;
  set.observations = targets;
  if (p) set.problems.push_back(std::move(p));
  return set;
}

}  // namespace

VaeArchitecture VaeArchitecture::make(std::size_t input_dim, std::size_t latent_dim, std::size_t coeff_dim,
                                      std::size_t width_cap) {
  if (input_dim == 0 || latent_dim == 0 || coeff_dim == 0 || width_cap == 0) {
    fail(ErrorCode::InvalidArgument, "architecture dimensions must be positive");
  }
  VaeArchitecture a;
  a.input_dim = input_dim;
  a.latent_dim = latent_dim;
  a.coeff_dim = coeff_dim;
  a.encoder_hidden[0] = step_width(input_dim, width_cap);
  a.encoder_hidden[1] = width_cap;
  a.decoder_hidden[0] = step_width(latent_dim, width_cap);
  a.decoder_hidden[1] = width_cap;
  return a;
}

std::vector<Parameter*> VaeParams::parameters() {
  std::vector<Parameter*> out;
  for (auto& l : layers) out.push_back(&l);
  return out;
}

std::size_t VaeParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.value.size());
  return n;
}

void VaeParams::zero_grad() {
  for (auto& l : layers) l.zero_grad();
}

VaeParams zero_vae(const VaeArchitecture& arch, EncoderInput mode) {
  VaeParams p;
  p.arch = arch;
  p.input_mode = mode;
  p.layers = make_layers(arch);
  return p;
}

VaeParams init_vae(const VaeArchitecture& arch, EncoderInput mode, SeededRng& rng) {
  VaeParams p = zero_vae(arch, mode);
  for (std::size_t i = 0; i < p.layers.size(); i += 2) {
    Matrix& w = p.layers[i].value;
    const double bound = 1.0 / std::sqrt(static_cast<double>(w.cols()));
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-bound, bound);
  }
  return p;
}

EncoderOutput encode(const VaeParams& params, const Matrix& inputs) {
  VaeParams& mutable_params = const_cast<VaeParams&>(params);  // tape reads values only; no backward here
  Tape t;
  const EncoderVars enc = encoder_on_tape(t, mutable_params, inputs);
  return {t.value(enc.mean), t.value(enc.log_var)};
}

Matrix decode(const VaeParams& params, const Matrix& latents) {
  if (static_cast<std::size_t>(latents.rows()) != params.arch.latent_dim) {
    fail(ErrorCode::ShapeMismatch, "decoder expects latent dimension " + std::to_string(params.arch.latent_dim));
  }
  VaeParams& mutable_params = const_cast<VaeParams&>(params);
  Tape t;
  return t.value(decoder_on_tape(t, mutable_params, t.constant(latents)));
}

Matrix reparameterize(const Matrix& mean, const Matrix& variance, SeededRng& rng) {
  if (mean.rows() != variance.rows() || mean.cols() != variance.cols()) {
    fail(ErrorCode::ShapeMismatch, "mean and variance shapes differ");
  }
  const Matrix eps = draw_noise(static_cast<std::size_t>(mean.rows()), static_cast<std::size_t>(mean.cols()), rng);
  return mean + variance.cwiseMax(0.0).cwiseSqrt().cwiseProduct(eps);
}

EvidenceTerms evidence_terms(const SensingProblem& p, const Vector& gamma, const Vector& y) {
  if (!(p.noise_var() > 0.0)) fail(ErrorCode::InvalidArgument, "evidence terms need noise_var > 0");
  const GammaFactor f = factor_gamma(p, gamma);
  const Vector mu = means_batch(p, f, y);
  const double sigma2 = p.noise_var();
  const double m = static_cast<double>(p.m());
  const double s = static_cast<double>(p.s());
  const double ratio_sum = f.diag_cov.cwiseQuotient(f.gamma).sum();
  const double trace = sigma2 * (s - ratio_sum);
  EvidenceTerms out;
  out.reconstruction = -0.5 * (m * (kLog2Pi + std::log(sigma2)) + ((y - p.phi() * mu).squaredNorm() + trace) / sigma2);
  out.kl_posterior = 0.5 * (f.gamma.array().log().sum() - f.logdet - s + ratio_sum + mu.cwiseAbs2().cwiseQuotient(f.gamma).sum());
  return out;
}

double kl_standard_normal(const Vector& mean, const Vector& variance) {
  if (mean.size() != variance.size()) fail(ErrorCode::ShapeMismatch, "mean and variance lengths differ");
  return 0.5 * (mean.cwiseAbs2() + variance - Vector::Ones(mean.size()) - variance.array().log().matrix()).sum();
}

ElboBreakdown elbo_sample(const VaeParams& params, const SensingProblem& p, const Vector& encoder_input,
                          const Vector& y, const Vector& latent) {
  const EncoderOutput enc = encode(params, encoder_input);
  const Vector gamma = decode(params, latent).col(0);
  const EvidenceTerms terms = evidence_terms(p, gamma, y);
  ElboBreakdown out;
  out.reconstruction = terms.reconstruction;
  out.kl_posterior = terms.kl_posterior;
  out.kl_latent = kl_standard_normal(enc.mean.col(0), enc.variance().col(0));
  out.total = out.reconstruction - out.kl_latent - out.kl_posterior;
  return out;
}

Var elbo_on_tape(Tape& t, VaeParams& params, const ObservationSet& data, const std::vector<std::size_t>& idx,
                 const Matrix& noise, TrainObjective objective) {
  if (noise.cols() != static_cast<Eigen::Index>(idx.size()) ||
      noise.rows() != static_cast<Eigen::Index>(params.arch.latent_dim)) {
    fail(ErrorCode::ShapeMismatch, "latent noise shape differs from batch");
  }
  const EncoderVars enc = encoder_on_tape(t, params, gather_columns(data.encoder_inputs, idx));
  const Var stddev = t.exp(t.scale(enc.log_var, 0.5));
  const Var latent = t.add(enc.mean, t.mul(stddev, t.constant(noise)));
  const Var gamma = decoder_on_tape(t, params, latent);

  const Var fit_term = objective == TrainObjective::Evidence
                           ? evidence_on_tape(t, gamma, data, idx)
                           : coefficient_loglik_on_tape(t, gamma, gather_columns(data.observations, idx));
  // KL(q || N(0, I)) = 1/2 sum(mu^2 + exp(lv) - 1 - lv)
  const Var kl_inner = t.sub(t.add(t.square(enc.mean), t.exp(enc.log_var)), enc.log_var);
  const Var kl = t.scale(t.sum(t.add_scalar(kl_inner, -1.0)), 0.5);
  return t.sub(fit_term, kl);
}

double mean_elbo(VaeParams& params, const ObservationSet& data, std::uint64_t seed, TrainObjective objective) {
  const std::size_t n = data.count();
  if (n == 0) fail(ErrorCode::EmptyInput, "mean_elbo on an empty set");
  SeededRng rng(seed, kNoiseStream);
  const Matrix noise = draw_noise(params.arch.latent_dim, n, rng);
  constexpr std::size_t kChunk = 256;
  double total = 0.0;
  for (std::size_t start = 0; start < n; start += kChunk) {
    const std::size_t len = std::min(kChunk, n - start);
    std::vector<std::size_t> idx(len);
    std::iota(idx.begin(), idx.end(), start);
    Tape t;
    const Var elbo = elbo_on_tape(t, params, data, idx, noise.middleCols(static_cast<Eigen::Index>(start),
                                                                         static_cast<Eigen::Index>(len)),
                                  objective);
    total += t.value(elbo)(0, 0);
  }
  return total / static_cast<double>(n);
}

double train_epoch(VaeParams& params, AdamState& adam, const TrainConfig& config, const ObservationSet& data,
                   SeededRng& rng) {
  const std::size_t n = data.count();
  if (n == 0) fail(ErrorCode::EmptyInput, "train_epoch on an empty set");
  if (config.batch_size == 0) fail(ErrorCode::InvalidArgument, "batch size must be positive");
  const std::vector<std::size_t> order = rng.permutation(n);
  const auto params_list = params.parameters();
  double total = 0.0;
  std::size_t batch_index = 0;
  for (std::size_t start = 0; start < n; start += config.batch_size, ++batch_index) {
    const std::size_t len = std::min(config.batch_size, n - start);
    const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                       order.begin() + static_cast<std::ptrdiff_t>(start + len));
    const Matrix noise = draw_noise(params.arch.latent_dim, len, rng);
    Tape t;
    Var elbo;
    try {
      elbo = elbo_on_tape(t, params, data, idx, noise, config.objective);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NonFiniteLoss) throw;
      fail(ErrorCode::NonFiniteLoss, std::string(e.what()) + " in batch " + std::to_string(batch_index));
    }
    const double value = t.value(elbo)(0, 0);
    check_finite(value, "in batch " + std::to_string(batch_index));
    total += value;
    const Var loss = t.scale(elbo, -1.0 / static_cast<double>(len));
    params.zero_grad();
    t.backward(loss);
    adam_step(adam, params_list);
  }
  return total / static_cast<double>(n);
}

PlateauSchedule::Action PlateauSchedule::observe(double value) {
  improved_ = value > best_;
  if (improved_) {
    best_ = value;
    stale_ = 0;
    return Action::Continue;
  }
  ++stale_;
  if (stale_ < std::max<std::size_t>(patience_, 1)) return Action::Continue;
  stale_ = 0;
  if (halvings_ < max_halvings_) {
    ++halvings_;
    return Action::HalveRate;
  }
  return Action::Stop;
}

TrainHistory fit(VaeParams& params, const TrainConfig& config, const ObservationSet& train,
                 const ObservationSet& validation) {
  if (train.count() == 0 || validation.count() == 0) fail(ErrorCode::EmptyInput, "fit needs training and validation data");
  SeededRng rng(config.seed, 0);
  const std::uint64_t val_seed = mix_seed(config.seed, 0x7A11);
  AdamState adam = make_adam(params.parameters(), config.learning_rate);
  PlateauSchedule schedule(config.patience, config.max_lr_halvings);
  TrainHistory history;
  std::vector<Parameter> best = params.layers;

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    history.learning_rate.push_back(adam.learning_rate);
    history.train_elbo.push_back(train_epoch(params, adam, config, train, rng));
    const double val = mean_elbo(params, validation, val_seed, config.objective);
    check_finite(val, "on validation after epoch " + std::to_string(epoch));
    history.val_elbo.push_back(val);
    const auto action = schedule.observe(val);
    if (schedule.improved_last()) {
      best = params.layers;
      history.best_epoch = epoch;
    }
    if (action == PlateauSchedule::Action::HalveRate) adam.learning_rate /= 2.0;
    if (action == PlateauSchedule::Action::Stop) {
      history.stopped_on_plateau = true;
      break;
    }
  }
  history.halvings = schedule.halvings();
  params.layers = std::move(best);
  params.zero_grad();
  return history;
}

TrainHistory fit_coefficients(VaeParams& params, TrainConfig config, const Matrix& encoder_inputs,
                              const Matrix& coefficients, const Matrix& val_inputs, const Matrix& val_coefficients) {
  config.objective = TrainObjective::Coefficients;
  return fit(params, config, wrap_targets(encoder_inputs, coefficients, nullptr),
             wrap_targets(val_inputs, val_coefficients, nullptr));
}

TrainHistory fit_signals(VaeParams& params, TrainConfig config, std::shared_ptr<const Dictionary> dictionary,
                         const Matrix& encoder_inputs, const Matrix& signals, const Matrix& val_inputs,
                         const Matrix& val_signals, double noise_var) {
  config.objective = TrainObjective::Evidence;
  auto p = std::make_shared<const SensingProblem>(SensingProblem::identity_measurement(std::move(dictionary), noise_var));
  return fit(params, config, wrap_targets(encoder_inputs, signals, p), wrap_targets(val_inputs, val_signals, p));
}

Vector csvae_estimate_cme(const VaeParams& params, const SensingProblem& p, const Vector& encoder_input,
                          const Vector& y, std::size_t n_samples, SeededRng& rng) {
  if (n_samples == 0) fail(ErrorCode::InvalidArgument, "CME needs at least one latent sample");
  const EncoderOutput enc = encode(params, encoder_input);
  const Matrix mean = enc.mean.replicate(1, static_cast<Eigen::Index>(n_samples));
  const Matrix var = enc.variance().replicate(1, static_cast<Eigen::Index>(n_samples));
  const Matrix gammas = decode(params, reparameterize(mean, var, rng));
  Vector acc = Vector::Zero(p.s());
  for (Eigen::Index j = 0; j < gammas.cols(); ++j) acc += posterior_mean(p, gammas.col(j), y);
  return p.dictionary().synthesize(acc / static_cast<double>(n_samples));
}

Vector csvae_estimate_map(const VaeParams& params, const SensingProblem& p, const Vector& encoder_input,
                          const Vector& y) {
  const EncoderOutput enc = encode(params, encoder_input);
  const Vector gamma = decode(params, enc.mean).col(0);
  return p.dictionary().synthesize(posterior_mean(p, gamma, y));
}

double latent_entropy(const VaeParams& params, const Vector& encoder_input) {
  const EncoderOutput enc = encode(params, encoder_input);
  return 0.5 * (static_cast<double>(enc.log_var.rows()) * (kLog2Pi + 1.0) + enc.log_var.col(0).sum());
}

}  // namespace csbayes
