#pragma once

#include "csbayes/linalg.hpp"

#include <array>
#include <cstddef>
#include <vector>

namespace csbayes {

/// Daubechies-4 (8-tap) filter bank, same tap order as the common wavelet
/// toolboxes. Boundaries use half-sample symmetric extension.
struct WaveletFilterBank {
  static constexpr std::size_t kTaps = 8;
  using Taps = std::array<double, kTaps>;

  Taps dec_lo;
  Taps dec_hi;
  Taps rec_lo;
  Taps rec_hi;

  static const WaveletFilterBank& db4();
};

/// One decimated analysis stage; output length floor((n + 7) / 2).
Vector dwt_step(const Vector& x, const WaveletFilterBank::Taps& filter);

/// One synthesis stage from equal-length bands; output length 2L - 6.
Vector idwt_step(const Vector& approx, const Vector& detail, const WaveletFilterBank& bank);

/// Largest level for which every stage input has at least 8 samples.
int max_feasible_level(std::size_t n);

/// Default level: floor(log2(n / 7)), at least 1.
int default_level(std::size_t n);

/// Band lengths in storage order [approx_L, detail_L, ..., detail_1].
/// Throws LevelTooDeep when some stage input is shorter than 8 samples.
std::vector<std::size_t> band_lengths(std::size_t n, int level);
std::size_t coefficient_count(std::size_t n, int level);

/// Multi-level analysis; coefficients concatenated in band_lengths order.
Vector wavedec(const Vector& x, int level);

/// Multi-level synthesis back to length n.
Vector waverec(const Vector& coeffs, std::size_t n, int level);

/// Separable analysis of a row-major h x w image: 1D analysis along rows,
/// then along columns; result is row-major (S_h x S_w).
Vector wavedec2(const Vector& image, std::size_t h, std::size_t w, int level_h, int level_w);

}  // namespace csbayes
