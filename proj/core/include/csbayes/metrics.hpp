#pragma once

#include "csbayes/linalg.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace csbayes {

struct MetricReport {
  std::string method;
  std::vector<double> nmse;  // per sample, ||x_hat - x||^2 / N
  double mean_nmse = 0.0;
  double std_nmse = 0.0;     // population std over samples
  std::vector<double> ssim;  // images only
  double mean_ssim = 0.0;
  double std_ssim = 0.0;
  double runtime_ms = 0.0;   // median per reconstruction
  std::uint64_t config_hash = 0;
};

/// Per-column nMSE with mean and spread filled in. Throws LengthMismatch.
MetricReport nmse(const Matrix& estimates, const Matrix& truths);

/// Sum of squared errors over N for a single pair. Throws LengthMismatch.
double nmse_single(const Vector& estimate, const Vector& truth);

/// Mean local SSIM over all fully contained 11x11 windows (Gaussian,
/// sigma 1.5), K1 = 0.01, K2 = 0.03, data range 1. Images are row-major.
/// Throws ShapeMismatch on size mismatch or an image smaller than the window.
double ssim(const Vector& a, const Vector& b, std::size_t height, std::size_t width);

/// Adds per-column SSIM of clipped images to `report`.
void add_ssim(MetricReport& report, const Matrix& estimates, const Matrix& truths, std::size_t height,
              std::size_t width);

/// Entries clamped to [0, 1].
Matrix clip_unit(const Matrix& m);

double mean_of(const std::vector<double>& v);
/// Population standard deviation; 0 for fewer than two values.
double std_of(const std::vector<double>& v);

}  // namespace csbayes
