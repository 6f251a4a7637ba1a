#include "csbayes/csvae.hpp"
#include "csbayes/error.hpp"
#include "csbayes/posterior.hpp"

#include "oracles.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <numbers>

using namespace csbayes;
using testutil::identity_dict;
using testutil::random_matrix;
using testutil::random_positive;
using testutil::random_problem;
using testutil::random_vector;

namespace {

ObservationSet shared_set(const SensingProblem& p, const Matrix& ys) {
  ObservationSet set;
  set.observations = ys;
  set.encoder_inputs = ys;
  set.problems.push_back(std::make_shared<const SensingProblem>(p));
  return set;
}

VaeParams small_vae(std::size_t input, std::size_t latent, std::size_t coeff, std::uint64_t seed, double scale = 1.0) {
  SeededRng rng(seed);
  auto params = init_vae(VaeArchitecture::make(input, latent, coeff, 12), EncoderInput::Raw, rng);
  for (auto& layer : params.layers) layer.value *= scale;
  // Non-zero biases so no unit sits exactly at a ReLU kink.
  SeededRng bias_rng(seed + 1000);
  for (std::size_t i = 1; i < params.layers.size(); i += 2)
    for (Eigen::Index j = 0; j < params.layers[i].value.size(); ++j) params.layers[i].value.data()[j] = 0.1 * bias_rng.normal();
  return params;
}

/// Decoder that outputs the constant gamma whatever z is.
void set_constant_decoder(VaeParams& params, const Vector& gamma) {
  for (std::size_t i = 6; i < params.layers.size(); ++i) params.layers[i].value.setZero();
  for (Eigen::Index j = 0; j < gamma.size(); ++j)
    params.layers[11].value(j, 0) = std::log(std::expm1(gamma(j) - kDecoderFloor));
}

double log_gaussian_1d(double x, double var) { return -0.5 * (std::log(2 * std::numbers::pi * var) + x * x / var); }

}  // namespace

TEST(CsvaeArchitecture, WidthsStepTowardsCap) {
  const auto a = VaeArchitecture::make(100, 16, 288, 128);
  EXPECT_EQ(a.encoder_hidden[0], 114u);
  EXPECT_EQ(a.encoder_hidden[1], 128u);
  EXPECT_EQ(a.decoder_hidden[0], 72u);
  EXPECT_EQ(a.decoder_hidden[1], 128u);
  EXPECT_THROW(VaeArchitecture::make(0, 16, 10, 128), Error);
}

TEST(CsvaeEncode, ZeroWeightsGiveStandardNormal) {
  const auto params = zero_vae(VaeArchitecture::make(5, 3, 7, 8), EncoderInput::Raw);
  SeededRng rng(90);
  const auto enc = encode(params, random_matrix(5, 4, rng));
  EXPECT_EQ(enc.mean, Matrix::Zero(3, 4));
  EXPECT_EQ(enc.variance(), Matrix::Ones(3, 4));
  EXPECT_THROW(encode(params, Matrix::Zero(4, 1)), Error);
  try {
    encode(params, Matrix::Zero(4, 1));
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
  }
}

TEST(CsvaeEncode, DeterministicAndJacobianMatchesFiniteDifferences) {
  auto params = small_vae(4, 3, 6, 91);
  SeededRng rng(92);
  const Matrix x = random_matrix(4, 2, rng);
  EXPECT_EQ(encode(params, x).mean, encode(params, x).mean);
  const Matrix weights = random_matrix(6, 2, rng);
  auto value = [&] {
    const auto e = encode(params, x);
    Matrix out(6, 2);
    out << e.mean, e.log_var;
    return out.cwiseProduct(weights).sum();
  };
  params.zero_grad();
  Tape t;
  Var h = t.relu(t.affine(t.parameter(params.layers[0]), t.constant(x), t.parameter(params.layers[1])));
  h = t.relu(t.affine(t.parameter(params.layers[2]), h, t.parameter(params.layers[3])));
  const Var out = t.affine(t.parameter(params.layers[4]), h, t.parameter(params.layers[5]));
  EXPECT_LT((t.value(out).topRows(3) - encode(params, x).mean).norm(), 1e-14);
  t.backward(t.sum(t.mul(out, t.constant(weights))));
  for (std::size_t li = 0; li < 6; ++li) {
    auto& layer = params.layers[li];
    for (Eigen::Index i = 0; i < layer.value.size(); ++i) {
      const double fd = oracle::central_difference(value, layer.value.data()[i], 1e-6);
      EXPECT_NEAR(layer.grad.data()[i], fd, 1e-5 * std::max(1.0, std::abs(fd))) << layer.name;
    }
  }
}

TEST(CsvaeReparameterize, LimitsAndMoments) {
  SeededRng rng(93);
  Vector mean(3);
  mean << 1.0, -2.0, 0.5;
  EXPECT_LT((reparameterize(mean, Vector::Constant(3, 1e-300), rng).col(0) - mean).norm(), 1e-140);
  const int draws = 100000;
  Vector var(3);
  var << 0.5, 2.0, 1.0;
  const Matrix z = reparameterize(mean.replicate(1, draws), var.replicate(1, draws), rng);
  const Vector avg = z.rowwise().mean();
  for (int j = 0; j < 3; ++j) EXPECT_LT(std::abs(avg(j) - mean(j)), 3 * std::sqrt(var(j) / draws));
  SeededRng a(5), b(5);
  EXPECT_EQ(reparameterize(mean, var, a), reparameterize(mean, var, b));
}

TEST(CsvaeDecode, ZeroWeightsAndPositivity) {
  const auto params = zero_vae(VaeArchitecture::make(5, 3, 7, 8), EncoderInput::Raw);
  const Matrix g = decode(params, Matrix::Zero(3, 2));
  EXPECT_LT((g.array() - (std::log(2.0) + 1e-6)).abs().maxCoeff(), 1e-15);
  auto random = small_vae(5, 3, 7, 94, 3.0);
  SeededRng rng(95);
  const Matrix big = decode(random, random_matrix(3, 10000, rng, 5.0));
  EXPECT_GT(big.minCoeff(), 0.0);
}

TEST(CsvaeDecode, GradientMatchesFiniteDifferences) {
  auto params = small_vae(4, 3, 5, 96);
  SeededRng rng(97);
  const Matrix z = random_matrix(3, 2, rng);
  const Matrix weights = random_matrix(5, 2, rng);
  auto value = [&] { return (decode(params, z).array().log() * weights.array()).sum(); };
  // Tape gradient through the same composition.
  params.zero_grad();
  Tape t;
  Var h = t.relu(t.affine(t.parameter(params.layers[6]), t.constant(z), t.parameter(params.layers[7])));
  h = t.relu(t.affine(t.parameter(params.layers[8]), h, t.parameter(params.layers[9])));
  const Var g = t.add_scalar(t.softplus(t.affine(t.parameter(params.layers[10]), h, t.parameter(params.layers[11]))),
                             kDecoderFloor);
  EXPECT_LT((t.value(g) - decode(params, z)).norm(), 1e-14);
  t.backward(t.sum(t.mul(t.log(g), t.constant(weights))));
  for (std::size_t li = 6; li < 12; ++li) {
    auto& layer = params.layers[li];
    for (Eigen::Index i = 0; i < layer.value.size(); ++i) {
      const double fd = oracle::central_difference(value, layer.value.data()[i], 1e-6);
      EXPECT_NEAR(layer.grad.data()[i], fd, 1e-5 * std::max(1.0, std::abs(fd))) << layer.name;
    }
  }
}

TEST(CsvaeElbo, HandEvaluatedOneDimensionalCase) {
  const SensingProblem p(Matrix::Ones(1, 1), identity_dict(1), 1.0);
  const auto terms = evidence_terms(p, Vector::Ones(1), Vector::Zero(1));
  EXPECT_NEAR(terms.reconstruction, -0.5 * (std::log(2 * std::numbers::pi) + 0.5), 1e-14);
  EXPECT_NEAR(terms.kl_posterior, 0.5 * (std::log(2.0) - 0.5), 1e-14);
  const auto direct = oracle::direct_elbo(Matrix::Ones(1, 1), Vector::Ones(1), 1.0, Vector::Zero(1), Vector::Zero(1),
                                          Vector::Ones(1));
  EXPECT_NEAR(direct.reconstruction, terms.reconstruction, 1e-14);
  EXPECT_NEAR(direct.kl_posterior, terms.kl_posterior, 1e-14);
  EXPECT_NEAR(direct.kl_latent, 0.0, 1e-15);
  EXPECT_EQ(kl_standard_normal(Vector::Zero(4), Vector::Ones(4)), 0.0);
}

// The central oracle: fast M x M terms against a direct evaluation with the
// full S x S posterior covariance, explicit trace and general Gaussian KL.
TEST(CsvaeElbo, FastPathMatchesDirectFormulaOnRandomProblems) {
  SeededRng rng(98);
  for (int t = 0; t < 30; ++t) {
    const Eigen::Index m = 2 + static_cast<Eigen::Index>(rng.uniform_index(8));
    const Eigen::Index s = m + 1 + static_cast<Eigen::Index>(rng.uniform_index(20));
    const double noise = rng.uniform(0.05, 1.0);
    const auto p = random_problem(m, s, noise, rng);
    auto params = small_vae(static_cast<std::size_t>(m), 3, static_cast<std::size_t>(s), 200 + t, 0.7);
    const Vector y = random_vector(m, rng);
    const Vector z = random_vector(3, rng);
    const auto fast = elbo_sample(params, p, y, y, z);
    const auto enc = encode(params, y);
    const auto direct =
        oracle::direct_elbo(p.phi(), decode(params, z).col(0), noise, y, enc.mean.col(0), enc.variance().col(0));
    const double scale = std::max(1.0, std::abs(direct.total));
    EXPECT_NEAR(fast.reconstruction, direct.reconstruction, 1e-8 * scale);
    EXPECT_NEAR(fast.kl_latent, direct.kl_latent, 1e-8 * scale);
    EXPECT_NEAR(fast.kl_posterior, direct.kl_posterior, 1e-8 * scale);
    EXPECT_NEAR(fast.total, direct.total, 1e-8 * scale);
    EXPECT_NEAR(fast.total, fast.reconstruction - fast.kl_latent - fast.kl_posterior, 1e-10 * scale);
    EXPECT_GE(fast.kl_latent, -1e-10);
    EXPECT_GE(fast.kl_posterior, -1e-10);
    // Reconstruction minus the posterior KL is the log evidence.
    EXPECT_NEAR(fast.reconstruction - fast.kl_posterior,
                marginal_loglik(observation_cov(p, decode(params, z).col(0)), y), 1e-8 * scale);
  }
}

TEST(CsvaeLoss, TapeGradientMatchesFiniteDifferences) {
  SeededRng rng(99);
  const auto p = random_problem(3, 4, 0.2, rng);
  const Matrix ys = random_matrix(3, 5, rng);
  const auto data = shared_set(p, ys);
  const std::vector<std::size_t> idx = {0, 1, 2, 3, 4};
  for (int point = 0; point < 10; ++point) {
    auto params = small_vae(3, 2, 4, 300 + point, 0.8);
    const Matrix noise = random_matrix(2, 5, rng);
    auto value = [&] {
      Tape t;
      return t.value(elbo_on_tape(t, params, data, idx, noise, TrainObjective::Evidence))(0, 0);
    };
    params.zero_grad();
    Tape t;
    t.backward(elbo_on_tape(t, params, data, idx, noise, TrainObjective::Evidence));
    for (auto& layer : params.layers) {
      Matrix fd(layer.value.rows(), layer.value.cols());
      for (Eigen::Index i = 0; i < layer.value.size(); ++i)
        fd.data()[i] = oracle::central_difference(value, layer.value.data()[i], 1e-6);
      EXPECT_LE((fd - layer.grad).norm(), 1e-4 * std::max(1.0, fd.norm())) << layer.name << " point " << point;
    }
  }
}

TEST(CsvaeTrain, ZeroLearningRateLeavesParameters) {
  SeededRng rng(100);
  const auto p = random_problem(3, 4, 0.2, rng);
  const auto data = shared_set(p, random_matrix(3, 20, rng));
  auto params = small_vae(3, 2, 4, 101);
  const auto before = params.layers;
  auto adam = make_adam(params.parameters(), 0.0);
  TrainConfig cfg;
  cfg.batch_size = 8;
  const double elbo = train_epoch(params, adam, cfg, data, rng);
  EXPECT_TRUE(std::isfinite(elbo));
  for (std::size_t i = 0; i < before.size(); ++i) EXPECT_EQ(params.layers[i].value, before[i].value);
}

TEST(CsvaeTrain, ElboImprovesOnTinyProblems) {
  int improved = 0;
  for (int seed = 0; seed < 30; ++seed) {
    SeededRng rng(static_cast<std::uint64_t>(1000 + seed));
    const auto p = random_problem(3, 4, 0.05, rng);
    Matrix ys(3, 32);
    for (Eigen::Index i = 0; i < 32; ++i) {
      Vector s = Vector::Zero(4);
      s(static_cast<Eigen::Index>(rng.uniform_index(4))) = 2.0 * rng.normal();
      ys.col(i) = p.phi() * s + std::sqrt(0.05) * random_vector(3, rng);
    }
    const auto data = shared_set(p, ys);
    SeededRng init(static_cast<std::uint64_t>(seed));
    auto params = init_vae(VaeArchitecture::make(3, 2, 4, 16), EncoderInput::Raw, init);
    const double before = mean_elbo(params, data, 7, TrainObjective::Evidence);
    auto adam = make_adam(params.parameters(), 1e-3);
    TrainConfig cfg;
    cfg.batch_size = 8;
    for (int epoch = 0; epoch < 200; ++epoch) train_epoch(params, adam, cfg, data, rng);
    improved += mean_elbo(params, data, 7, TrainObjective::Evidence) > before;
  }
  EXPECT_GE(improved, 28);
}

TEST(CsvaeTrain, NonFiniteLossAborts) {
  SeededRng rng(102);
  const auto p = random_problem(3, 4, 0.2, rng);
  Matrix ys = random_matrix(3, 8, rng);
  ys(1, 5) = std::nan("");
  auto params = small_vae(3, 2, 4, 103);
  auto adam = make_adam(params.parameters(), 1e-3);
  TrainConfig cfg;
  cfg.batch_size = 4;
  try {
    train_epoch(params, adam, cfg, shared_set(p, ys), rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonFiniteLoss);
  }
}

TEST(PlateauScheduleTest, PatienceZeroStagnantStopsAfterOneHalving) {
  PlateauSchedule sched(0, 1);
  EXPECT_EQ(sched.observe(-5.0), PlateauSchedule::Action::Continue);
  EXPECT_EQ(sched.observe(-5.0), PlateauSchedule::Action::HalveRate);
  EXPECT_EQ(sched.observe(-5.0), PlateauSchedule::Action::Stop);
}

TEST(PlateauScheduleTest, PatienceWindowAndImprovementReset) {
  PlateauSchedule sched(3, 1);
  EXPECT_EQ(sched.observe(1.0), PlateauSchedule::Action::Continue);
  EXPECT_EQ(sched.observe(0.5), PlateauSchedule::Action::Continue);
  EXPECT_EQ(sched.observe(0.9), PlateauSchedule::Action::Continue);
  EXPECT_EQ(sched.observe(1.5), PlateauSchedule::Action::Continue);
  EXPECT_TRUE(sched.improved_last());
  EXPECT_EQ(sched.observe(1.0), PlateauSchedule::Action::Continue);
  EXPECT_EQ(sched.observe(1.0), PlateauSchedule::Action::Continue);
  EXPECT_EQ(sched.observe(1.0), PlateauSchedule::Action::HalveRate);
  EXPECT_EQ(sched.halvings(), 1u);
  EXPECT_EQ(sched.observe(1.0), PlateauSchedule::Action::Continue);
  EXPECT_EQ(sched.observe(1.0), PlateauSchedule::Action::Continue);
  EXPECT_EQ(sched.observe(1.0), PlateauSchedule::Action::Stop);
}

TEST(PlateauScheduleTest, ImprovingForeverNeverStops) {
  PlateauSchedule sched(1, 1);
  for (int i = 0; i < 10000; ++i) ASSERT_EQ(sched.observe(static_cast<double>(i)), PlateauSchedule::Action::Continue);
}

TEST(CsvaeFit, ZeroRateStagnatesThenStops) {
  SeededRng rng(104);
  const auto p = random_problem(3, 4, 0.2, rng);
  auto params = small_vae(3, 2, 4, 105);
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.patience = 0;
  cfg.batch_size = 8;
  cfg.max_epochs = 50;
  const auto hist = fit(params, cfg, shared_set(p, random_matrix(3, 16, rng)), shared_set(p, random_matrix(3, 8, rng)));
  EXPECT_EQ(hist.val_elbo.size(), 3u);
  EXPECT_EQ(hist.halvings, 1u);
  EXPECT_TRUE(hist.stopped_on_plateau);
  EXPECT_EQ(hist.best_epoch, 0u);
}

TEST(CsvaeFit, ReturnsBestValidationParameters) {
  SeededRng rng(106);
  const auto p = random_problem(3, 4, 0.05, rng);
  const auto train = shared_set(p, random_matrix(3, 64, rng, 2.0));
  const auto val = shared_set(p, random_matrix(3, 16, rng, 2.0));
  auto params = small_vae(3, 2, 4, 107);
  TrainConfig cfg;
  cfg.learning_rate = 1e-2;
  cfg.batch_size = 16;
  cfg.max_epochs = 15;
  cfg.seed = 3;
  const auto hist = fit(params, cfg, train, val);
  ASSERT_FALSE(hist.val_elbo.empty());
  const double best = *std::max_element(hist.val_elbo.begin(), hist.val_elbo.end());
  EXPECT_EQ(hist.val_elbo[hist.best_epoch], best);
  EXPECT_LE(hist.val_elbo.size(), 15u);
}

TEST(CsvaeGroundTruth, CoefficientObjectivePeaksAtSquaredCoefficient) {
  auto params = zero_vae(VaeArchitecture::make(2, 2, 1, 4), EncoderInput::Raw);
  ObservationSet set;
  set.encoder_inputs = Matrix::Zero(2, 1);
  set.observations = Matrix::Constant(1, 1, 1.7);
  const Matrix noise = Matrix::Zero(2, 1);
  auto objective = [&](double gamma) {
    set_constant_decoder(params, Vector::Constant(1, gamma));
    Tape t;
    return t.value(elbo_on_tape(t, params, set, {0}, noise, TrainObjective::Coefficients))(0, 0);
  };
  const double at_peak = objective(1.7 * 1.7);
  // Zero-weight encoder contributes no KL, so the value is the Gaussian loglik.
  EXPECT_NEAR(at_peak, log_gaussian_1d(1.7, 1.7 * 1.7), 1e-9);
  for (double g : {0.5, 1.0, 2.5, 3.2, 5.0, 10.0}) EXPECT_LT(objective(g), at_peak);
}

TEST(CsvaeGroundTruth, SignalPathEqualsCompressedPathWithIdentityMeasurement) {
  SeededRng rng(108);
  auto dict = std::make_shared<const Dictionary>(build_db4_1d(16, 1));
  const Matrix x = random_matrix(16, 4, rng);
  auto params = small_vae(16, 3, static_cast<std::size_t>(dict->coeff_dim()), 109, 0.5);
  const Matrix noise = random_matrix(3, 4, rng);
  const SensingProblem with_a(Matrix::Identity(16, 16), dict, 1e-8);
  ObservationSet compressed = shared_set(with_a, x);
  ObservationSet signal = shared_set(SensingProblem::identity_measurement(dict, 1e-8), x);
  Tape a, b;
  const double va = a.value(elbo_on_tape(a, params, compressed, {0, 1, 2, 3}, noise, TrainObjective::Evidence))(0, 0);
  const double vb = b.value(elbo_on_tape(b, params, signal, {0, 1, 2, 3}, noise, TrainObjective::Evidence))(0, 0);
  EXPECT_NEAR(va, vb, 1e-9 * std::abs(va));
}

TEST(CsvaeEstimate, ConstantDecoderMakesSampleCountIrrelevant) {
  SeededRng rng(110);
  const auto p = random_problem(4, 6, 0.1, rng);
  auto params = small_vae(4, 2, 6, 111);
  const Vector gamma = random_positive(6, rng);
  set_constant_decoder(params, gamma);
  const Vector y = random_vector(4, rng);
  const Vector expected = p.dictionary().synthesize(posterior_mean(p, decode(params, Matrix::Zero(2, 1)).col(0), y));
  for (std::size_t n : {1u, 7u, 64u}) EXPECT_LT((csvae_estimate_cme(params, p, y, y, n, rng) - expected).norm(), 1e-10);
  EXPECT_LT((csvae_estimate_map(params, p, y, y) - expected).norm(), 1e-10);
  EXPECT_THROW(csvae_estimate_cme(params, p, y, y, 0, rng), Error);
}

TEST(CsvaeEstimate, DegenerateEncoderMatchesMap) {
  SeededRng rng(112);
  const auto p = random_problem(4, 6, 0.1, rng);
  auto params = small_vae(4, 2, 6, 113);
  // Force log-variance to a huge negative constant: zero weights, bias -60.
  params.layers[4].value.bottomRows(2).setZero();
  params.layers[5].value.bottomRows(2).setConstant(-60.0);
  const Vector y = random_vector(4, rng);
  const Vector map = csvae_estimate_map(params, p, y, y);
  EXPECT_LT((csvae_estimate_cme(params, p, y, y, 1, rng) - map).norm(), 1e-8 * std::max(1.0, map.norm()));
  EXPECT_LT((csvae_estimate_cme(params, p, y, y, 256, rng) - map).norm(), 1e-8 * std::max(1.0, map.norm()));
}

TEST(CsvaeEstimate, ZeroObservationWithZeroBiasGivesZero) {
  SeededRng rng(114);
  const auto p = random_problem(4, 6, 0.1, rng);
  auto params = init_vae(VaeArchitecture::make(4, 2, 6, 8), EncoderInput::Raw, rng);
  EXPECT_EQ(csvae_estimate_map(params, p, Vector::Zero(4), Vector::Zero(4)).norm(), 0.0);
}

TEST(CsvaeEstimate, MonteCarloVarianceShrinksLikeInverseSampleCount) {
  SeededRng rng(115);
  const auto p = random_problem(4, 6, 0.1, rng);
  auto params = small_vae(4, 2, 6, 116, 1.5);
  const Vector y = random_vector(4, rng, 2.0);
  std::vector<double> logn, logv;
  for (std::size_t n : {1u, 4u, 16u, 64u}) {
    const int repeats = 400;
    Matrix est(p.n(), repeats);
    for (int r = 0; r < repeats; ++r) est.col(r) = csvae_estimate_cme(params, p, y, y, n, rng);
    const Vector mean = est.rowwise().mean();
    const double var = (est.colwise() - mean).squaredNorm() / (repeats - 1);
    logn.push_back(std::log(static_cast<double>(n)));
    logv.push_back(std::log(var));
  }
  const double mx = std::accumulate(logn.begin(), logn.end(), 0.0) / 4, my = std::accumulate(logv.begin(), logv.end(), 0.0) / 4;
  double sxy = 0, sxx = 0;
  for (int i = 0; i < 4; ++i) {
    sxy += (logn[i] - mx) * (logv[i] - my);
    sxx += (logn[i] - mx) * (logn[i] - mx);
  }
  EXPECT_NEAR(sxy / sxx, -1.0, 0.2);
}

TEST(CsvaeEstimate, MapIsCheaperThanCme) {
  SeededRng rng(117);
  const auto p = random_problem(20, 60, 0.1, rng);
  auto params = small_vae(20, 4, 60, 118);
  const Vector y = random_vector(20, rng);
  using clock = std::chrono::steady_clock;
  auto t0 = clock::now();
  for (int i = 0; i < 20; ++i) csvae_estimate_map(params, p, y, y);
  auto t1 = clock::now();
  for (int i = 0; i < 20; ++i) csvae_estimate_cme(params, p, y, y, 64, rng);
  auto t2 = clock::now();
  EXPECT_LT(t1 - t0, t2 - t1);
}

TEST(CsvaeEntropy, StandardNormalAndScaling) {
  auto params = zero_vae(VaeArchitecture::make(5, 16, 7, 8), EncoderInput::Raw);
  const Vector y = Vector::Ones(5);
  const double standard = 8.0 * std::log(2 * std::numbers::pi * std::numbers::e);
  EXPECT_NEAR(latent_entropy(params, y), standard, 1e-12);
  // 8 log(2 pi e) = 22.70302; the commonly quoted 22.7036 is a rounding slip.
  EXPECT_NEAR(latent_entropy(params, y), 22.7036, 1e-3);
  params.layers[5].value.bottomRows(16).setConstant(std::log(4.0));
  EXPECT_NEAR(latent_entropy(params, y), standard + 16 * std::log(2.0), 1e-12);
}

// log p(y) by quadrature over a one-dimensional latent bounds the ELBO.
TEST(CsvaeBound, LogEvidenceDominatesElbo) {
  SeededRng rng(119);
  Matrix phi(1, 2);
  phi << 0.8, -0.6;
  const double noise = 0.05;
  const SensingProblem p(phi, identity_dict(2), noise);
  Matrix ys(1, 200);
  for (Eigen::Index i = 0; i < 200; ++i) {
    const double scale = rng.bernoulli(0.5) ? 1.5 : 0.2;
    ys(0, i) = scale * rng.normal();
  }
  SeededRng init(3);
  auto params = init_vae(VaeArchitecture::make(1, 1, 2, 8), EncoderInput::Raw, init);
  TrainConfig cfg;
  cfg.learning_rate = 3e-3;
  cfg.batch_size = 32;
  cfg.max_epochs = 60;
  fit(params, cfg, shared_set(p, ys), shared_set(p, ys.leftCols(50)));
  for (Eigen::Index i = 0; i < 10; ++i) {
    const Vector y = ys.col(i);
    double evidence = 0.0;
    const int points = 4001;
    const double lo = -10.0, hi = 10.0, step = (hi - lo) / (points - 1);
    for (int k = 0; k < points; ++k) {
      const double z = lo + k * step;
      const double w = (k == 0 || k == points - 1) ? 0.5 : 1.0;
      const Vector g = decode(params, Matrix::Constant(1, 1, z)).col(0);
      evidence += w * step * std::exp(log_gaussian_1d(z, 1.0) + marginal_loglik(observation_cov(p, g), y));
    }
    const auto enc = encode(params, y);
    const int draws = 4000;
    const Matrix z = reparameterize(enc.mean.replicate(1, draws), enc.variance().replicate(1, draws), rng);
    double acc = 0.0, acc_sq = 0.0;
    for (int d = 0; d < draws; ++d) {
      const double v = elbo_sample(params, p, y, y, z.col(d)).total;
      acc += v;
      acc_sq += v * v;
    }
    const double elbo = acc / draws;
    const double se = std::sqrt(std::max(0.0, acc_sq / draws - elbo * elbo) / draws);
    EXPECT_GE(std::log(evidence), elbo - 3 * se) << i;
  }
}
