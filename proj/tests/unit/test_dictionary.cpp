#include "csbayes/dictionary.hpp"
#include "csbayes/error.hpp"
#include "csbayes/rng.hpp"
#include "csbayes/wavelet.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace csbayes;
using testutil::random_matrix;
using testutil::random_vector;

namespace {

// Half-sample symmetric padding, full convolution, then every second entry
// starting at offset 8. Written without reference to the library's stage.
Vector padded_convolution_step(const Vector& x, const WaveletFilterBank::Taps& filter) {
  const Eigen::Index n = x.size(), pad = 7;
  Vector padded(n + 2 * pad);
  for (Eigen::Index i = 0; i < padded.size(); ++i) {
    Eigen::Index k = i - pad;
    while (k < 0 || k >= n) k = k < 0 ? -k - 1 : 2 * n - k - 1;
    padded(i) = x(k);
  }
  const Eigen::Index full = padded.size() + 8 - 1;
  Vector conv = Vector::Zero(full);
  for (Eigen::Index i = 0; i < full; ++i)
    for (Eigen::Index j = 0; j < 8; ++j)
      if (i - j >= 0 && i - j < padded.size()) conv(i) += filter[static_cast<std::size_t>(j)] * padded(i - j);
  const Eigen::Index len = (n + 7) / 2;
  Vector out(len);
  for (Eigen::Index o = 0; o < len; ++o) out(o) = conv(8 + 2 * o);
  return out;
}

}  // namespace

TEST(Wavelet, FilterBankQuadratureMirror) {
  const auto& bank = WaveletFilterBank::db4();
  double lo_sum = 0, lo_sq = 0, hi_sum = 0;
  for (std::size_t k = 0; k < 8; ++k) {
    lo_sum += bank.dec_lo[k];
    lo_sq += bank.dec_lo[k] * bank.dec_lo[k];
    hi_sum += bank.dec_hi[k];
    const double sign = (k % 2 == 0) ? -1.0 : 1.0;
    EXPECT_NEAR(bank.dec_hi[k], sign * bank.dec_lo[7 - k], 1e-15);
    EXPECT_NEAR(bank.rec_lo[k], bank.dec_lo[7 - k], 1e-15);
    EXPECT_NEAR(bank.rec_hi[k], bank.dec_hi[7 - k], 1e-15);
  }
  EXPECT_NEAR(lo_sum, std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(lo_sq, 1.0, 1e-12);
  EXPECT_NEAR(hi_sum, 0.0, 1e-12);
}

TEST(Wavelet, AnalysisStageMatchesPaddedConvolution) {
  SeededRng rng(21);
  const auto& bank = WaveletFilterBank::db4();
  for (std::size_t n : {8u, 9u, 16u, 31u, 64u, 256u}) {
    const Vector x = random_vector(static_cast<Eigen::Index>(n), rng);
    EXPECT_LT((dwt_step(x, bank.dec_lo) - padded_convolution_step(x, bank.dec_lo)).norm(), 1e-12) << n;
    EXPECT_LT((dwt_step(x, bank.dec_hi) - padded_convolution_step(x, bank.dec_hi)).norm(), 1e-12) << n;
  }
}

TEST(Wavelet, SynthesisInvertsOneStage) {
  SeededRng rng(22);
  const auto& bank = WaveletFilterBank::db4();
  for (std::size_t n : {8u, 20u, 64u}) {
    const Vector x = random_vector(static_cast<Eigen::Index>(n), rng);
    const Vector r = idwt_step(dwt_step(x, bank.dec_lo), dwt_step(x, bank.dec_hi), bank);
    ASSERT_GE(r.size(), static_cast<Eigen::Index>(n));
    EXPECT_LT((r.head(static_cast<Eigen::Index>(n)) - x).norm(), 1e-10);
  }
}

TEST(Wavelet, BandLengthsAndLevels) {
  EXPECT_EQ(band_lengths(8, 1), (std::vector<std::size_t>{7, 7}));
  EXPECT_EQ(coefficient_count(8, 1), 14u);
  EXPECT_EQ(coefficient_count(256, 5), 288u);
  EXPECT_EQ(default_level(256), 5);
  EXPECT_THROW(band_lengths(8, 2), Error);
  EXPECT_GE(max_feasible_level(256), default_level(256));
}

TEST(Dictionary, OneDimensionalLevelOneSize) {
  const auto d = build_db4_1d(8, 1);
  EXPECT_EQ(d.signal_dim(), 8);
  EXPECT_EQ(d.coeff_dim(), 14);
}

TEST(Dictionary, ExperimentSizeIsOvercomplete) {
  const auto d = build_db4_1d(256);
  EXPECT_EQ(d.signal_dim(), 256);
  EXPECT_GT(d.coeff_dim(), 256);
  EXPECT_TRUE(all_finite(d.matrix));
}

TEST(Dictionary, ColumnsAreSynthesisOfCanonicalVectors) {
  const auto d = build_db4_1d(32, 2);
  for (Eigen::Index j = 0; j < d.coeff_dim(); ++j) {
    Vector e = Vector::Zero(d.coeff_dim());
    e(j) = 1.0;
    EXPECT_LT((waverec(e, 32, 2) - d.matrix.col(j)).norm(), 1e-12);
  }
}

TEST(Dictionary, InteriorLevelOneDetailColumnsAreShiftedTaps) {
  const std::size_t n = 64;
  const auto d = build_db4_1d(n, 1);
  const auto lens = band_lengths(n, 1);
  const Eigen::Index detail_start = static_cast<Eigen::Index>(lens[0]);
  // Two interior neighbours: the same waveform shifted by two samples.
  const Eigen::Index j = detail_start + 15;
  const Vector a = d.matrix.col(j), b = d.matrix.col(j + 1);
  EXPECT_LT((a.segment(10, 30) - b.segment(12, 30)).norm(), 1e-12);
  // And the waveform is the reconstruction filter itself.
  Eigen::Index first = 0;
  while (std::abs(a(first)) < 1e-14) ++first;
  const auto& bank = WaveletFilterBank::db4();
  for (std::size_t k = 0; k < 8; ++k)
    EXPECT_NEAR(std::abs(a(first + static_cast<Eigen::Index>(k))), std::abs(bank.rec_hi[k]), 1e-12);
}

TEST(Dictionary, PerfectReconstructionEveryKind) {
  SeededRng rng(23);
  const std::vector<Dictionary> dicts = {
      build_identity(16), build_db4_1d(40, 2), build_db4_1d(256), build_db4_2d(8, 8, 1), build_db4_2d(12, 16),
      build_block_diagonal({build_db4_1d(16, 1), build_db4_1d(16, 1), build_db4_1d(16, 1)})};
  for (const auto& d : dicts) {
    for (int t = 0; t < 50; ++t) {
      const Vector x = random_vector(d.signal_dim(), rng);
      EXPECT_LT((d.synthesize(d.analyze(x)) - x).norm(), 1e-8) << to_string(d.kind);
    }
  }
}

TEST(Dictionary, TwoDimensionalKroneckerSize) {
  const auto d = build_db4_2d(8, 8, 1);
  EXPECT_EQ(d.signal_dim(), 64);
  EXPECT_EQ(d.coeff_dim(), 196);
}

TEST(Dictionary, TwoDimensionalAnalysisMatchesWavedec2) {
  SeededRng rng(24);
  const auto d = build_db4_2d(8, 8, 1);
  const Vector img = random_vector(64, rng);
  EXPECT_LT((d.synthesize(wavedec2(img, 8, 8, 1, 1)) - img).norm(), 1e-8);
}

TEST(Dictionary, ImageShapeAccepted) {
  const auto d = build_db4_2d(28, 28);
  EXPECT_EQ(d.signal_dim(), 784);
  EXPECT_GT(d.coeff_dim(), 784);
}

TEST(Dictionary, BlockDiagonalStructure) {
  SeededRng rng(25);
  const auto block = build_db4_1d(16, 1);
  const auto one = build_block_diagonal({block});
  EXPECT_EQ(one.matrix, block.matrix);
  const auto three = build_block_diagonal({block, block, block});
  EXPECT_EQ(three.signal_dim(), 3 * block.signal_dim());
  EXPECT_EQ(three.coeff_dim(), 3 * block.coeff_dim());
  const Eigen::Index n = block.signal_dim(), s = block.coeff_dim();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) EXPECT_EQ(three.matrix.block(i * n, j * s, n, s).cwiseAbs().maxCoeff(), 0.0);
  const Vector c = random_vector(3 * s, rng);
  const Vector x = three.synthesize(c);
  for (int i = 0; i < 3; ++i) EXPECT_LT((x.segment(i * n, n) - block.synthesize(c.segment(i * s, s))).norm(), 1e-14);
  EXPECT_THROW(build_block_diagonal({}), Error);
}

TEST(Dictionary, Identity) {
  const auto d = build_identity(3);
  EXPECT_EQ(d.matrix, Matrix::Identity(3, 3));
  Vector s(3);
  s << 1, -2, 3;
  EXPECT_EQ(d.synthesize(s), s);
}

TEST(Dictionary, Errors) {
  EXPECT_THROW(build_db4_1d(7, 1), Error);
  try {
    build_db4_1d(16, max_feasible_level(16) + 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LevelTooDeep);
  }
  EXPECT_EQ(parse_dictionary_kind("db4-2d"), DictionaryKind::Db4_2d);
  EXPECT_THROW(parse_dictionary_kind("haar"), Error);
}
