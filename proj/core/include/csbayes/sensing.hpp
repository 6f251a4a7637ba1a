#pragma once

#include "csbayes/linalg.hpp"
#include "csbayes/problem.hpp"
#include "csbayes/rng.hpp"

#include <array>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace csbayes {

/// M x N with i.i.d. N(0, 1/M) entries. Throws BadDimensions unless 1 <= m < n.
Matrix draw_measurement_matrix(std::size_t m, std::size_t n, SeededRng& rng);

/// Matrix of sample `index` in a per-sample dataset; regenerated on demand
/// from (base_seed, index).
Matrix measurement_for_sample(std::uint64_t base_seed, std::uint64_t index, std::size_t m, std::size_t n);

struct PiecewiseSmoothSpec {
  std::size_t n = 256;
  double domain_end = 4.0;
  double poly_magnitude = 0.4;   // h = +-0.4 with probability 1/2
  double amplitude_std = 0.1;    // a ~ N(0, 0.1^2)
  double frequency = 4.0;        // sin(frequency * pi * t + eta)
  bool independent_third_amplitude = false;
};

struct PiecewiseCoefficients {
  double g1 = 0.0;
  double g2 = 0.0;
  std::array<std::array<double, 3>, 3> poly{};  // poly[segment][power]
  std::array<double, 3> amplitude{};
  std::array<double, 3> phase{};
};

/// Draw order is fixed: g1, g2, then per segment h0, h1, h2, a, eta. All
/// three amplitudes are always drawn; the third segment reuses the second
/// one unless spec.independent_third_amplitude is set.
PiecewiseCoefficients draw_piecewise_coefficients(const PiecewiseSmoothSpec& spec, SeededRng& rng);

/// Samples at t_j = domain_end * j / n.
Vector evaluate_piecewise(const PiecewiseSmoothSpec& spec, const PiecewiseCoefficients& c);

/// N x count, one signal per column; sample i uses rng.split(i).
Matrix generate_piecewise_smooth(const PiecewiseSmoothSpec& spec, std::size_t count, SeededRng& rng);

/// mean_i ||clean_i||^2 / (M 10^{snr/10}); clean holds A x per column.
double noise_variance_for_snr(const Matrix& clean, double snr_db);

/// 40 dB style surrogate from observations alone: mean ||y||^2 / (M 10^{snr/10}).
double surrogate_noise_variance(const Matrix& observations, double snr_db = 40.0);

struct Corrupted {
  Matrix observations;
  double noise_var = 0.0;
};

/// Adds N(0, noise_var I) to every column; snr_db = +inf gives noise_var = 0.
Corrupted corrupt(const Matrix& clean, double snr_db, SeededRng& rng);

struct IdxImages {
  std::size_t count = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  Matrix pixels;  // (height * width) x count, row-major per image, in [0, 1]
};

/// IDX unsigned-byte images (magic 0x00000803). Throws BadMagic,
/// TruncatedFile, Io.
IdxImages load_idx_images(const std::string& path);
IdxImages parse_idx_images(std::span<const std::uint8_t> bytes);

/// A^T (A A^T)^{-1} y. Throws RankDeficient.
Vector least_squares_embed(const Vector& y, const Matrix& measurement);

enum class MatrixMode { Shared, PerSample };

/// Ground truth and observations for one experiment split. Per-sample
/// matrices are not stored; measurement(i) rebuilds them from matrix_seed.
struct DatasetBundle {
  std::string kind;
  Matrix signals;       // N x count (may be empty)
  Matrix coefficients;  // S x count (may be empty)
  Matrix observations;  // M x count
  MatrixMode mode = MatrixMode::Shared;
  Matrix shared_measurement;
  std::uint64_t matrix_seed = 0;
  double noise_var = 0.0;
  double snr_db = std::numeric_limits<double>::infinity();
  std::size_t image_height = 0;
  std::size_t image_width = 0;

  std::size_t count() const { return static_cast<std::size_t>(observations.cols()); }
  std::size_t m() const { return static_cast<std::size_t>(observations.rows()); }
  std::size_t n() const { return static_cast<std::size_t>(signals.rows()); }
  Matrix measurement(std::size_t index) const;
};

/// Measures and corrupts `signals` (N x count). Shared mode draws one
/// matrix from (seed, stream 1); per-sample mode derives matrix i from
/// (seed, i). Noise uses stream 2.
DatasetBundle make_bundle(const Matrix& signals, std::size_t m, double snr_db, MatrixMode mode,
                          std::uint64_t seed, const std::string& kind = "custom");

/// Shared-mode bundle measured with a given matrix; noise from (noise_seed, stream 2).
DatasetBundle make_bundle_with_matrix(const Matrix& signals, const Matrix& measurement, double snr_db,
                                     std::uint64_t noise_seed, const std::string& kind = "custom");

enum class EncoderInput { Raw, LeastSquares };

/// Observations paired with the problem each one was measured under. For a
/// shared matrix there is a single problem; otherwise one per observation,
/// each holding its own Phi_i = A_i D (A_i dropped).
struct ObservationSet {
  Matrix observations;                  // M x count
  Matrix encoder_inputs;                // M x count or N x count
  std::vector<std::shared_ptr<const SensingProblem>> problems;

  std::size_t count() const { return static_cast<std::size_t>(observations.cols()); }
  bool shared() const { return problems.size() == 1; }
  const SensingProblem& problem(std::size_t i) const { return shared() ? *problems.front() : *problems.at(i); }
  /// Subset by column indices, sharing problem storage where possible.
  ObservationSet select(const std::vector<std::size_t>& indices) const;
};

ObservationSet make_observation_set(const DatasetBundle& bundle, std::shared_ptr<const Dictionary> dictionary,
                                    double noise_var, EncoderInput input);

}  // namespace csbayes
