#include "csbayes/metrics.hpp"

#include "csbayes/error.hpp"

#include <array>
#include <cmath>
#include <numeric>
#include <string>

namespace csbayes {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

std::array<double, kWindow * kWindow> gaussian_window() {
  std::array<double, kWindow> g{};
  double total = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - kWindow / 2;
    g[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    total += g[i];
  }
  std::array<double, kWindow * kWindow> w{};
  for (int r = 0; r < kWindow; ++r)
    for (int c = 0; c < kWindow; ++c) w[r * kWindow + c] = g[r] * g[c] / (total * total);
  return w;
}

}  // namespace

double nmse_single(const Vector& estimate, const Vector& truth) {
  if (estimate.size() != truth.size() || truth.size() == 0) {
    fail(ErrorCode::LengthMismatch, "nmse lengths " + std::to_string(estimate.size()) + " vs " +
                                        std::to_string(truth.size()));
  }
  return (estimate - truth).squaredNorm() / static_cast<double>(truth.size());
}

MetricReport nmse(const Matrix& estimates, const Matrix& truths) {
  if (estimates.rows() != truths.rows() || estimates.cols() != truths.cols()) {
    fail(ErrorCode::LengthMismatch, "estimate and truth matrices differ in shape");
  }
  MetricReport r;
  r.nmse.reserve(static_cast<std::size_t>(truths.cols()));
  for (Eigen::Index i = 0; i < truths.cols(); ++i) r.nmse.push_back(nmse_single(estimates.col(i), truths.col(i)));
  r.mean_nmse = mean_of(r.nmse);
  r.std_nmse = std_of(r.nmse);
  return r;
}

double ssim(const Vector& a, const Vector& b, std::size_t height, std::size_t width) {
  const auto expected = static_cast<Eigen::Index>(height * width);
  if (a.size() != expected || b.size() != expected) fail(ErrorCode::ShapeMismatch, "image sizes differ from shape");
  if (height < kWindow || width < kWindow) fail(ErrorCode::ShapeMismatch, "image smaller than the 11x11 window");
  static const auto w = gaussian_window();
  const auto h = static_cast<int>(height);
  const auto wd = static_cast<int>(width);
  double total = 0.0;
  int count = 0;
  for (int r0 = 0; r0 + kWindow <= h; ++r0) {
    for (int c0 = 0; c0 + kWindow <= wd; ++c0) {
      double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
      for (int r = 0; r < kWindow; ++r) {
        for (int c = 0; c < kWindow; ++c) {
          const double wt = w[r * kWindow + c];
          const Eigen::Index k = (r0 + r) * wd + (c0 + c);
          ma += wt * a(k);
          mb += wt * b(k);
          saa += wt * a(k) * a(k);
          sbb += wt * b(k) * b(k);
          sab += wt * a(k) * b(k);
        }
      }
      const double va = saa - ma * ma;
      const double vb = sbb - mb * mb;
      const double cab = sab - ma * mb;
      total += ((2 * ma * mb + kC1) * (2 * cab + kC2)) / ((ma * ma + mb * mb + kC1) * (va + vb + kC2));
      ++count;
    }
  }
  return total / count;
}

void add_ssim(MetricReport& report, const Matrix& estimates, const Matrix& truths, std::size_t height,
              std::size_t width) {
  if (estimates.rows() != truths.rows() || estimates.cols() != truths.cols()) {
    fail(ErrorCode::ShapeMismatch, "estimate and truth matrices differ in shape");
  }
  const Matrix ce = clip_unit(estimates);
  const Matrix ct = clip_unit(truths);
  report.ssim.clear();
  for (Eigen::Index i = 0; i < truths.cols(); ++i) report.ssim.push_back(ssim(ce.col(i), ct.col(i), height, width));
  report.mean_ssim = mean_of(report.ssim);
  report.std_ssim = std_of(report.ssim);
}

Matrix clip_unit(const Matrix& m) { return m.cwiseMax(0.0).cwiseMin(1.0); }

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mu = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - mu) * (x - mu);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

}  // namespace csbayes
