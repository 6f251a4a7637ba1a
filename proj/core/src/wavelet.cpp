#include "csbayes/wavelet.hpp"

#include "csbayes/error.hpp"

#include <cmath>
#include <string>

namespace csbayes {

namespace {

constexpr std::size_t kTaps = WaveletFilterBank::kTaps;

WaveletFilterBank make_db4() {
  WaveletFilterBank b{};
  b.rec_lo = {0.2303778133088964,  0.7148465705529154, 0.6308807679298587, -0.0279837694168599,
              -0.1870348117190931, 0.0308413818355607, 0.0328830116668852, -0.0105974017850690};
  for (std::size_t k = 0; k < kTaps; ++k) {
    b.dec_lo[k] = b.rec_lo[kTaps - 1 - k];
    b.dec_hi[k] = (k % 2 == 0 ? -1.0 : 1.0) * b.rec_lo[k];
  }
  for (std::size_t k = 0; k < kTaps; ++k) b.rec_hi[k] = b.dec_hi[kTaps - 1 - k];
  return b;
}

// half-sample symmetric: ... x1 x0 | x0 x1 ... x_{n-1} | x_{n-1} x_{n-2} ...
std::ptrdiff_t reflect(std::ptrdiff_t i, std::ptrdiff_t n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -1 - i;
    if (i >= n) i = 2 * n - 1 - i;
  }
  return i;
}

}  // namespace

const WaveletFilterBank& WaveletFilterBank::db4() {
  static const WaveletFilterBank bank = make_db4();
  return bank;
}

Vector dwt_step(const Vector& x, const WaveletFilterBank::Taps& filter) {
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  if (n == 0) fail(ErrorCode::EmptyInput, "dwt_step on an empty signal");
  const std::ptrdiff_t len = (n + static_cast<std::ptrdiff_t>(kTaps) - 1) / 2;
  Vector out(len);
  for (std::ptrdiff_t o = 0; o < len; ++o) {
    double acc = 0.0;
    for (std::size_t j = 0; j < kTaps; ++j) {
      acc += filter[j] * x(reflect(2 * o + 1 - static_cast<std::ptrdiff_t>(j), n));
    }
    out(o) = acc;
  }
  return out;
}

Vector idwt_step(const Vector& approx, const Vector& detail, const WaveletFilterBank& bank) {
  if (approx.size() != detail.size()) fail(ErrorCode::DimensionMismatch, "idwt_step band lengths differ");
  const auto len = static_cast<std::ptrdiff_t>(approx.size());
  constexpr auto half = static_cast<std::ptrdiff_t>(kTaps / 2);
  if (len < half) fail(ErrorCode::LevelTooDeep, "idwt_step bands too short");
  Vector out = Vector::Zero(2 * len - static_cast<std::ptrdiff_t>(kTaps) + 2);
  std::ptrdiff_t o = 0;
  for (std::ptrdiff_t i = half - 1; i < len; ++i, o += 2) {
    double even = 0.0;
    double odd = 0.0;
    for (std::ptrdiff_t j = 0; j < half; ++j) {
      even += bank.rec_lo[2 * j] * approx(i - j) + bank.rec_hi[2 * j] * detail(i - j);
      odd += bank.rec_lo[2 * j + 1] * approx(i - j) + bank.rec_hi[2 * j + 1] * detail(i - j);
    }
    out(o) += even;
    out(o + 1) += odd;
  }
  return out;
}

int max_feasible_level(std::size_t n) {
  int level = 0;
  while (n >= kTaps) {
    ++level;
    n = (n + kTaps - 1) / 2;
  }
  return level;
}

int default_level(std::size_t n) {
  if (n < kTaps) return 1;
  const int l = static_cast<int>(std::floor(std::log2(static_cast<double>(n) / (kTaps - 1))));
  return l < 1 ? 1 : l;
}

std::vector<std::size_t> band_lengths(std::size_t n, int level) {
  if (level < 1) fail(ErrorCode::LevelTooDeep, "level must be at least 1");
  std::vector<std::size_t> details;
  std::size_t len = n;
  for (int l = 0; l < level; ++l) {
    if (len < kTaps) {
      fail(ErrorCode::LevelTooDeep, "level " + std::to_string(level) + " infeasible for length " +
                                        std::to_string(n));
    }
    len = (len + kTaps - 1) / 2;
    details.push_back(len);
  }
  std::vector<std::size_t> out{len};
  for (auto it = details.rbegin(); it != details.rend(); ++it) out.push_back(*it);
  return out;
}

std::size_t coefficient_count(std::size_t n, int level) {
  std::size_t total = 0;
  for (auto b : band_lengths(n, level)) total += b;
  return total;
}

Vector wavedec(const Vector& x, int level) {
  const auto lengths = band_lengths(static_cast<std::size_t>(x.size()), level);
  const auto& bank = WaveletFilterBank::db4();
  std::vector<Vector> details;
  Vector approx = x;
  for (int l = 0; l < level; ++l) {
    details.push_back(dwt_step(approx, bank.dec_hi));
    approx = dwt_step(approx, bank.dec_lo);
  }
  Vector out(coefficient_count(static_cast<std::size_t>(x.size()), level));
  Eigen::Index pos = 0;
  out.segment(pos, approx.size()) = approx;
  pos += approx.size();
  for (auto it = details.rbegin(); it != details.rend(); ++it) {
    out.segment(pos, it->size()) = *it;
    pos += it->size();
  }
  return out;
}

Vector waverec(const Vector& coeffs, std::size_t n, int level) {
  const auto lengths = band_lengths(n, level);
  std::size_t total = 0;
  for (auto b : lengths) total += b;
  if (static_cast<std::size_t>(coeffs.size()) != total) {
    fail(ErrorCode::DimensionMismatch, "waverec expects " + std::to_string(total) + " coefficients");
  }
  const auto& bank = WaveletFilterBank::db4();
  Eigen::Index pos = static_cast<Eigen::Index>(lengths[0]);
  Vector approx = coeffs.head(pos);
  for (std::size_t b = 1; b < lengths.size(); ++b) {
    const auto dlen = static_cast<Eigen::Index>(lengths[b]);
    const Vector detail = coeffs.segment(pos, dlen);
    pos += dlen;
    if (approx.size() == dlen + 1) approx.conservativeResize(dlen);
    approx = idwt_step(approx, detail, bank);
  }
  return approx.head(static_cast<Eigen::Index>(n));
}

Vector wavedec2(const Vector& image, std::size_t h, std::size_t w, int level_h, int level_w) {
  if (static_cast<std::size_t>(image.size()) != h * w) {
    fail(ErrorCode::DimensionMismatch, "wavedec2: image size differs from h*w");
  }
  const auto sh = static_cast<Eigen::Index>(coefficient_count(h, level_h));
  const auto sw = static_cast<Eigen::Index>(coefficient_count(w, level_w));
  const auto hh = static_cast<Eigen::Index>(h);
  const auto ww = static_cast<Eigen::Index>(w);

  Matrix rows_done(hh, sw);
  for (Eigen::Index r = 0; r < hh; ++r) {
    const Vector row = image.segment(r * ww, ww);
    rows_done.row(r) = wavedec(row, level_w).transpose();
  }
  Matrix both(sh, sw);
  for (Eigen::Index c = 0; c < sw; ++c) {
    both.col(c) = wavedec(rows_done.col(c), level_h);
  }
  Vector out(sh * sw);
  for (Eigen::Index r = 0; r < sh; ++r) out.segment(r * sw, sw) = both.row(r).transpose();
  return out;
}

}  // namespace csbayes
