#include "csbayes/audit.hpp"
#include "csbayes/error.hpp"
#include "csbayes/metrics.hpp"
#include "csbayes/model_io.hpp"
#include "csbayes/posterior.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace csbayes;
using testutil::random_matrix;
using testutil::random_problem;
using testutil::random_vector;

namespace {

// Straight from the definition, one window at a time.
double brute_force_ssim(const Vector& a, const Vector& b, int h, int w) {
  double g[11][11], total = 0.0;
  for (int i = 0; i < 11; ++i)
    for (int j = 0; j < 11; ++j) total += g[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2 * 1.5 * 1.5));
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double acc = 0.0;
  int windows = 0;
  for (int r = 0; r + 11 <= h; ++r)
    for (int c = 0; c + 11 <= w; ++c) {
      double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
      for (int i = 0; i < 11; ++i)
        for (int j = 0; j < 11; ++j) {
          const double wt = g[i][j] / total, va = a((r + i) * w + c + j), vb = b((r + i) * w + c + j);
          ma += wt * va;
          mb += wt * vb;
          saa += wt * va * va;
          sbb += wt * vb * vb;
          sab += wt * va * vb;
        }
      const double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
      acc += (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++windows;
    }
  return acc / windows;
}

std::string temp_path(const std::string& name) { return (std::filesystem::temp_directory_path() / name).string(); }

}  // namespace

TEST(Nmse, Examples) {
  SeededRng rng(130);
  const Matrix x = random_matrix(16, 5, rng);
  EXPECT_EQ(nmse(x, x).mean_nmse, 0.0);
  const Vector ones = Vector::Ones(9);
  EXPECT_DOUBLE_EQ(nmse_single(Vector::Zero(9), ones), 1.0);
  const Matrix est = random_matrix(16, 5, rng);
  const auto r = nmse(est, x);
  double expected = 0.0;
  for (Eigen::Index i = 0; i < 5; ++i) expected += (est.col(i) - x.col(i)).squaredNorm() / 16.0 / 5.0;
  EXPECT_NEAR(r.mean_nmse, expected, 1e-12);
  EXPECT_EQ(r.nmse.size(), 5u);
  for (double v : r.nmse) EXPECT_GE(v, 0.0);
  EXPECT_THROW(nmse(est.leftCols(4), x), Error);
  EXPECT_THROW(nmse_single(Vector::Zero(3), Vector::Zero(4)), Error);
}

TEST(Nmse, SpreadIsPopulationStd) {
  EXPECT_NEAR(std_of({1.0, 3.0}), 1.0, 1e-15);
  EXPECT_EQ(std_of({4.0}), 0.0);
  EXPECT_DOUBLE_EQ(mean_of({1.0, 2.0, 6.0}), 3.0);
}

TEST(Ssim, IdenticalAndUniformImages) {
  SeededRng rng(131);
  const Vector a = (random_vector(16 * 16, rng).array() * 0.3 + 0.5).matrix();
  EXPECT_NEAR(ssim(a, a, 16, 16), 1.0, 1e-12);
  EXPECT_NEAR(ssim(Vector::Constant(144, 0.5), Vector::Constant(144, 0.5), 12, 12), 1.0, 1e-12);
}

TEST(Ssim, BlackVersusWhiteMatchesUniformPatchFormula) {
  const double c1 = 1e-4, c2 = 9e-4;
  const double mu1 = 0.0, mu2 = 1.0;
  const double expected = (2 * mu1 * mu2 + c1) * (0 + c2) / ((mu1 * mu1 + mu2 * mu2 + c1) * (0 + c2));
  EXPECT_NEAR(ssim(Vector::Zero(169), Vector::Ones(169), 13, 13), expected, 1e-12);
  EXPECT_GT(expected, 0.0);
}

TEST(Ssim, MatchesBruteForceAndBounds) {
  SeededRng rng(132);
  for (int t = 0; t < 5; ++t) {
    const Vector a = clip_unit(random_matrix(20 * 14, 1, rng, 0.5).array() + 0.5).col(0);
    const Vector b = clip_unit(random_matrix(20 * 14, 1, rng, 0.5).array() + 0.5).col(0);
    const double v = ssim(a, b, 20, 14);
    EXPECT_NEAR(v, brute_force_ssim(a, b, 20, 14), 1e-12);
    EXPECT_GE(v, -1.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_THROW(ssim(Vector::Zero(100), Vector::Zero(100), 10, 10), Error);
  EXPECT_THROW(ssim(Vector::Zero(144), Vector::Zero(143), 12, 12), Error);
}

TEST(Ssim, ReportClipsInputs) {
  Matrix est = Matrix::Constant(144, 1, 1.7);
  MetricReport r;
  add_ssim(r, est, Matrix::Ones(144, 1), 12, 12);
  ASSERT_EQ(r.ssim.size(), 1u);
  EXPECT_NEAR(r.ssim[0], 1.0, 1e-12);
}

TEST(Audit, RandomMixtureHasNoViolations) {
  SeededRng rng(133);
  const auto model = init_mixture(20, 8, rng);
  const auto report = audit_sparsity_bound(model, 10000, rng);
  EXPECT_EQ(report.draws, 10000u);
  EXPECT_EQ(report.violations, 0u);
  EXPECT_LE(report.max_log_ratio, 0.0);
}

TEST(Audit, RandomDecoderHasNoViolations) {
  SeededRng rng(134);
  const auto vae = init_vae(VaeArchitecture::make(8, 4, 12, 16), EncoderInput::Raw, rng);
  const auto report = audit_sparsity_bound(vae, 10000, rng);
  EXPECT_EQ(report.violations, 0u);
}

TEST(Audit, SingleUnitComponentTouchesBoundAtOnes) {
  GammaMixture g;
  g.weights = Vector::Ones(1);
  g.gammas = Matrix::Ones(3, 1);
  EXPECT_TRUE(check_sparsity_bound(g.weights, g.gammas, Vector::Ones(3)));
  EXPECT_NEAR(mixture_log_density(g.weights, g.gammas, Vector::Ones(3)), log_sparsity_bound(Vector::Ones(3)), 1e-13);
}

TEST(ModelIo, MixtureRoundTripIsBitExact) {
  SeededRng rng(135);
  const auto model = init_mixture(10, 3, rng);
  ModelHeader h;
  h.kind = "csgmm";
  h.config_hash = 0xabcdef;
  h.meta["dictionary"] = "db4-1d";
  const auto path = temp_path("csbayes_mixture.bin");
  save_model(path, model, h);
  const auto loaded = load_mixture(path);
  EXPECT_EQ(loaded.model.weights, model.weights);
  EXPECT_EQ(loaded.model.gammas, model.gammas);
  EXPECT_EQ(loaded.header.config_hash, 0xabcdefu);
  EXPECT_EQ(loaded.header.meta.at("dictionary"), "db4-1d");
  EXPECT_EQ(read_model_header(path).kind, "csgmm");
  const auto p = random_problem(4, 10, 0.1, rng);
  const Matrix ys = random_matrix(4, 3, rng);
  EXPECT_EQ(csgmm_estimate(model, p, ys, Estimator::Cme), csgmm_estimate(loaded.model, p, ys, Estimator::Cme));
  std::filesystem::remove(path);
}

TEST(ModelIo, VaeRoundTripGivesIdenticalReconstructions) {
  SeededRng rng(136);
  const auto vae = init_vae(VaeArchitecture::make(6, 3, 10, 12), EncoderInput::LeastSquares, rng);
  ModelHeader h;
  h.kind = "csvae";
  const auto bytes = serialize_model(vae, h);
  const auto loaded = parse_vae(bytes);
  EXPECT_EQ(loaded.model.input_mode, EncoderInput::LeastSquares);
  ASSERT_EQ(loaded.model.layers.size(), vae.layers.size());
  for (std::size_t i = 0; i < vae.layers.size(); ++i) EXPECT_EQ(loaded.model.layers[i].value, vae.layers[i].value);
  const auto p = random_problem(6, 10, 0.1, rng);
  const Vector y = random_vector(6, rng);
  EXPECT_EQ(csvae_estimate_map(vae, p, y, y), csvae_estimate_map(loaded.model, p, y, y));
}

TEST(ModelIo, CorruptionAndVersionErrors) {
  SeededRng rng(137);
  ModelHeader h;
  h.kind = "csgmm";
  const auto bytes = serialize_model(init_mixture(5, 2, rng), h);
  auto code = [](const std::function<void()>& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Io;
  };
  EXPECT_EQ(code([&] { parse_mixture(bytes.substr(0, bytes.size() / 2)); }), ErrorCode::Corrupt);
  std::string flipped = bytes;
  flipped[flipped.size() / 2] ^= 0x10;
  EXPECT_EQ(code([&] { parse_mixture(flipped); }), ErrorCode::Corrupt);
  EXPECT_EQ(code([&] { parse_vae(bytes); }), ErrorCode::Corrupt);
  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_EQ(code([&] { parse_mixture(bad_magic); }), ErrorCode::Corrupt);
  // Version field sits right after the magic; patch it and fix the checksum.
  std::string newer = bytes.substr(0, bytes.size() - 8);
  newer[8] = 2;
  const std::uint64_t sum = fnv1a(newer);
  for (int i = 0; i < 8; ++i) newer.push_back(static_cast<char>((sum >> (8 * i)) & 0xff));
  EXPECT_EQ(code([&] { parse_mixture(newer); }), ErrorCode::VersionMismatch);
  const auto path = temp_path("csbayes_truncated.bin");
  {
    std::ofstream out(path, std::ios::binary);
    out << bytes.substr(0, 20);
  }
  EXPECT_EQ(code([&] { load_mixture(path); }), ErrorCode::Corrupt);
  std::filesystem::remove(path);
  EXPECT_EQ(code([&] { load_mixture("/nonexistent/model.bin"); }), ErrorCode::Io);
}

TEST(ModelIo, FnvKnownValues) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cull);
}
