#include "csbayes/csgmm.hpp"
#include "csbayes/csvae.hpp"
#include "csbayes/dictionary.hpp"
#include "csbayes/lasso.hpp"
#include "csbayes/posterior.hpp"
#include "csbayes/sensing.hpp"
#include "csbayes/wavelet.hpp"

#include <benchmark/benchmark.h>

#include <memory>

using namespace csbayes;

namespace {

struct Fixture {
  SensingProblem problem;
  Vector gamma;
  Vector y;
};

// Wavelet dictionary of length n with a Gaussian matrix of m rows.
Fixture make_fixture(std::size_t m, std::size_t n) {
  SeededRng rng(17);
  auto dict = std::make_shared<const Dictionary>(build_db4_1d(n));
  SensingProblem p(draw_measurement_matrix(m, n, rng), dict, 0.01);
  Vector gamma(dict->coeff_dim());
  for (Eigen::Index i = 0; i < gamma.size(); ++i) gamma(i) = rng.uniform(0.01, 1.0);
  Vector y(static_cast<Eigen::Index>(m));
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = rng.normal();
  return {std::move(p), std::move(gamma), std::move(y)};
}

void BM_PosteriorFast(benchmark::State& state) {
  const auto f = make_fixture(static_cast<std::size_t>(state.range(0)), 256);
  for (auto _ : state) benchmark::DoNotOptimize(posterior_moments_fast(f.problem, f.gamma, f.y));
}
BENCHMARK(BM_PosteriorFast)->Arg(40)->Arg(100)->Arg(160)->Unit(benchmark::kMicrosecond);

void BM_PosteriorReference(benchmark::State& state) {
  const auto f = make_fixture(static_cast<std::size_t>(state.range(0)), 256);
  for (auto _ : state) benchmark::DoNotOptimize(posterior_moments_reference(f.problem, f.gamma, f.y));
}
BENCHMARK(BM_PosteriorReference)->Arg(40)->Arg(100)->Arg(160)->Unit(benchmark::kMicrosecond);

void BM_FactorGamma(benchmark::State& state) {
  const auto f = make_fixture(static_cast<std::size_t>(state.range(0)), 256);
  for (auto _ : state) benchmark::DoNotOptimize(factor_gamma(f.problem, f.gamma));
}
BENCHMARK(BM_FactorGamma)->Arg(40)->Arg(100)->Arg(160)->Unit(benchmark::kMicrosecond);

void BM_CsgmmEStep(benchmark::State& state) {
  const auto f = make_fixture(100, 256);
  SeededRng rng(3);
  const auto model = init_mixture(static_cast<std::size_t>(f.problem.phi().cols()), 8, rng);
  const Matrix ys = f.y.replicate(1, state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(csgmm_e_step(model, f.problem, ys));
}
BENCHMARK(BM_CsgmmEStep)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_CsvaeMap(benchmark::State& state) {
  const auto f = make_fixture(100, 256);
  SeededRng rng(5);
  const auto vae =
      init_vae(VaeArchitecture::make(100, 16, static_cast<std::size_t>(f.problem.phi().cols()), 128),
               EncoderInput::Raw, rng);
  for (auto _ : state) benchmark::DoNotOptimize(csvae_estimate_map(vae, f.problem, f.y, f.y));
}
BENCHMARK(BM_CsvaeMap)->Unit(benchmark::kMicrosecond);

void BM_Lasso(benchmark::State& state) {
  const auto f = make_fixture(100, 256);
  LassoConfig cfg;
  cfg.lambda = 1e-2;
  cfg.tol = 1e-8;
  for (auto _ : state) benchmark::DoNotOptimize(lasso_solve(f.problem, f.y, cfg));
}
BENCHMARK(BM_Lasso)->Unit(benchmark::kMillisecond);

void BM_Wavedec(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  SeededRng rng(9);
  Vector x(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.normal();
  const int level = default_level(n);
  for (auto _ : state) benchmark::DoNotOptimize(wavedec(x, level));
}
BENCHMARK(BM_Wavedec)->Arg(256)->Arg(4096)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
