#include "csbayes/sensing.hpp"

#include "csbayes/error.hpp"
#include "csbayes/parallel.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <string>

namespace csbayes {

namespace {

constexpr std::uint64_t kMatrixStream = 1;
constexpr std::uint64_t kNoiseStream = 2;
constexpr std::uint64_t kPerSampleStream = 0x5A3F;

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t at) {
  return (std::uint32_t{bytes[at]} << 24) | (std::uint32_t{bytes[at + 1]} << 16) |
         (std::uint32_t{bytes[at + 2]} << 8) | std::uint32_t{bytes[at + 3]};
}

}  // namespace

Matrix draw_measurement_matrix(std::size_t m, std::size_t n, SeededRng& rng) {
  if (m < 1 || m >= n) {
    fail(ErrorCode::BadDimensions, "measurement matrix needs 1 <= m < n, got m=" + std::to_string(m) +
                                       " n=" + std::to_string(n));
  }
  const double sd = 1.0 / std::sqrt(static_cast<double>(m));
  Matrix a(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  // fill row by row so the draw order matches row-major reading
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) a(r, c) = sd * rng.normal();
  }
  return a;
}

Matrix measurement_for_sample(std::uint64_t base_seed, std::uint64_t index, std::size_t m, std::size_t n) {
  SeededRng rng(mix_seed(base_seed, index), kPerSampleStream);
  return draw_measurement_matrix(m, n, rng);
}

PiecewiseCoefficients draw_piecewise_coefficients(const PiecewiseSmoothSpec& spec, SeededRng& rng) {
  PiecewiseCoefficients c;
  const double half = spec.domain_end / 2.0;
  c.g1 = rng.uniform(0.0, half);
  c.g2 = rng.uniform(half, spec.domain_end);
  for (std::size_t seg = 0; seg < 3; ++seg) {
    for (auto& h : c.poly[seg]) h = rng.bernoulli(0.5) ? spec.poly_magnitude : -spec.poly_magnitude;
    c.amplitude[seg] = rng.normal(0.0, spec.amplitude_std);
    c.phase[seg] = rng.uniform(0.0, 2.0 * std::numbers::pi);
  }
  if (!spec.independent_third_amplitude) c.amplitude[2] = c.amplitude[1];
  return c;
}

Vector evaluate_piecewise(const PiecewiseSmoothSpec& spec, const PiecewiseCoefficients& c) {
  Vector x(static_cast<Eigen::Index>(spec.n));
  for (std::size_t j = 0; j < spec.n; ++j) {
    const double t = spec.domain_end * static_cast<double>(j) / static_cast<double>(spec.n);
    const std::size_t seg = t < c.g1 ? 0 : (t < c.g2 ? 1 : 2);
    const auto& h = c.poly[seg];
    x(static_cast<Eigen::Index>(j)) = h[0] + h[1] * t + h[2] * t * t +
                                      c.amplitude[seg] * std::sin(spec.frequency * std::numbers::pi * t + c.phase[seg]);
  }
  return x;
}

Matrix generate_piecewise_smooth(const PiecewiseSmoothSpec& spec, std::size_t count, SeededRng& rng) {
  if (count < 1) fail(ErrorCode::InvalidArgument, "generate_piecewise_smooth needs count >= 1");
  Matrix out(static_cast<Eigen::Index>(spec.n), static_cast<Eigen::Index>(count));
  for (std::size_t i = 0; i < count; ++i) {
    SeededRng sample_rng = rng.split(i);
    out.col(static_cast<Eigen::Index>(i)) = evaluate_piecewise(spec, draw_piecewise_coefficients(spec, sample_rng));
  }
  return out;
}

double noise_variance_for_snr(const Matrix& clean, double snr_db) {
  if (clean.size() == 0) fail(ErrorCode::EmptyInput, "noise_variance_for_snr on an empty batch");
  if (std::isinf(snr_db) && snr_db > 0) return 0.0;
  const double mean_energy = clean.colwise().squaredNorm().mean();
  return mean_energy / (static_cast<double>(clean.rows()) * std::pow(10.0, snr_db / 10.0));
}

double surrogate_noise_variance(const Matrix& observations, double snr_db) {
  return noise_variance_for_snr(observations, snr_db);
}

Corrupted corrupt(const Matrix& clean, double snr_db, SeededRng& rng) {
  Corrupted out;
  out.noise_var = noise_variance_for_snr(clean, snr_db);
  out.observations = clean;
  if (out.noise_var > 0.0) {
    const double sd = std::sqrt(out.noise_var);
    for (Eigen::Index c = 0; c < clean.cols(); ++c) {
      for (Eigen::Index r = 0; r < clean.rows(); ++r) out.observations(r, c) += sd * rng.normal();
    }
  }
  return out;
}

IdxImages parse_idx_images(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) fail(ErrorCode::TruncatedFile, "IDX header shorter than the magic number");
  const std::uint32_t magic = read_be32(bytes, 0);
  if (magic != 0x00000803u) fail(ErrorCode::BadMagic, "expected IDX magic 0x00000803");
  if (bytes.size() < 16) fail(ErrorCode::TruncatedFile, "IDX header truncated");
  IdxImages out;
  out.count = read_be32(bytes, 4);
  out.height = read_be32(bytes, 8);
  out.width = read_be32(bytes, 12);
  const std::size_t pixels = out.height * out.width;
  const std::size_t payload = out.count * pixels;
  if (payload == 0 || bytes.size() - 16 < payload) {
    fail(ErrorCode::TruncatedFile, "IDX payload holds " + std::to_string(bytes.size() - 16) + " of " +
                                       std::to_string(payload) + " bytes");
  }
  out.pixels.resize(static_cast<Eigen::Index>(pixels), static_cast<Eigen::Index>(out.count));
  for (std::size_t i = 0; i < out.count; ++i) {
    for (std::size_t p = 0; p < pixels; ++p) {
      out.pixels(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(i)) =
          static_cast<double>(bytes[16 + i * pixels + p]) / 255.0;
    }
  }
  return out;
}

IdxImages load_idx_images(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_idx_images(bytes);
}

Vector least_squares_embed(const Vector& y, const Matrix& measurement) {
  if (y.size() != measurement.rows()) fail(ErrorCode::DimensionMismatch, "least_squares_embed: y length differs");
  const Matrix gram = measurement * measurement.transpose();
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success) fail(ErrorCode::RankDeficient, "A A^T is singular");
  const auto diag = llt.matrixLLT().diagonal();
  const double lo = diag.cwiseAbs().minCoeff();
  const double hi = diag.cwiseAbs().maxCoeff();
  if (!(lo > 1e-7 * hi)) fail(ErrorCode::RankDeficient, "A does not have full row rank");
  return measurement.transpose() * llt.solve(y);
}

Matrix DatasetBundle::measurement(std::size_t index) const {
  if (mode == MatrixMode::Shared) return shared_measurement;
  if (index >= count()) fail(ErrorCode::InvalidArgument, "sample index out of range");
  return measurement_for_sample(matrix_seed, index, m(), static_cast<std::size_t>(signals.rows()));
}

DatasetBundle make_bundle(const Matrix& signals, std::size_t m, double snr_db, MatrixMode mode,
                          std::uint64_t seed, const std::string& kind) {
  if (signals.cols() == 0) fail(ErrorCode::EmptyInput, "make_bundle needs at least one signal");
  const auto n = static_cast<std::size_t>(signals.rows());
  DatasetBundle b;
  b.kind = kind;
  b.signals = signals;
  b.mode = mode;
  b.snr_db = snr_db;
  b.matrix_seed = seed;

  Matrix clean(static_cast<Eigen::Index>(m), signals.cols());
  if (mode == MatrixMode::Shared) {
    SeededRng rng(seed, kMatrixStream);
    b.shared_measurement = draw_measurement_matrix(m, n, rng);
    clean = b.shared_measurement * signals;
  } else {
    parallel_for(static_cast<std::size_t>(signals.cols()), [&](std::size_t i) {
      const auto c = static_cast<Eigen::Index>(i);
      clean.col(c) = measurement_for_sample(seed, i, m, n) * signals.col(c);
    });
  }
  SeededRng noise_rng(seed, kNoiseStream);
  Corrupted cy = corrupt(clean, snr_db, noise_rng);
  b.observations = std::move(cy.observations);
  b.noise_var = cy.noise_var;
  return b;
}

DatasetBundle make_bundle_with_matrix(const Matrix& signals, const Matrix& measurement, double snr_db,
                                     std::uint64_t noise_seed, const std::string& kind) {
  if (signals.cols() == 0) fail(ErrorCode::EmptyInput, "make_bundle needs at least one signal");
  if (measurement.cols() != signals.rows() || measurement.rows() < 1 || measurement.rows() >= measurement.cols()) {
    fail(ErrorCode::BadDimensions, "measurement matrix must be M x N with 1 <= M < N");
  }
  DatasetBundle b;
  b.kind = kind;
  b.signals = signals;
  b.mode = MatrixMode::Shared;
  b.snr_db = snr_db;
  b.matrix_seed = noise_seed;
  b.shared_measurement = measurement;
  SeededRng noise_rng(noise_seed, kNoiseStream);
  Corrupted cy = corrupt(measurement * signals, snr_db, noise_rng);
  b.observations = std::move(cy.observations);
  b.noise_var = cy.noise_var;
  return b;
}

ObservationSet ObservationSet::select(const std::vector<std::size_t>& indices) const {
  ObservationSet out;
  out.observations.resize(observations.rows(), static_cast<Eigen::Index>(indices.size()));
  out.encoder_inputs.resize(encoder_inputs.rows(), static_cast<Eigen::Index>(indices.size()));
  for (std::size_t j = 0; j < indices.size(); ++j) {
    const auto src = static_cast<Eigen::Index>(indices[j]);
    out.observations.col(static_cast<Eigen::Index>(j)) = observations.col(src);
    out.encoder_inputs.col(static_cast<Eigen::Index>(j)) = encoder_inputs.col(src);
  }
  if (shared()) {
    out.problems = problems;
  } else {
    out.problems.reserve(indices.size());
    for (auto i : indices) out.problems.push_back(problems.at(i));
  }
  return out;
}

ObservationSet make_observation_set(const DatasetBundle& bundle, std::shared_ptr<const Dictionary> dictionary,
                                    double noise_var, EncoderInput input) {
  if (!dictionary) fail(ErrorCode::InvalidArgument, "observation set needs a dictionary");
  const std::size_t count = bundle.count();
  ObservationSet out;
  out.observations = bundle.observations;
  if (bundle.mode == MatrixMode::Shared) {
    out.problems.push_back(std::make_shared<const SensingProblem>(bundle.shared_measurement, dictionary, noise_var, true));
    if (input == EncoderInput::Raw) {
      out.encoder_inputs = bundle.observations;
    } else {
      const Matrix& a = bundle.shared_measurement;
      const Matrix gram = a * a.transpose();
      Eigen::LLT<Matrix> llt(gram);
      if (llt.info() != Eigen::Success) fail(ErrorCode::RankDeficient, "A A^T is singular");
      out.encoder_inputs = a.transpose() * llt.solve(bundle.observations);
    }
    return out;
  }

  const auto n = static_cast<Eigen::Index>(dictionary->signal_dim());
  out.encoder_inputs.resize(input == EncoderInput::Raw ? bundle.observations.rows() : n,
                            static_cast<Eigen::Index>(count));
  out.problems.resize(count);
  parallel_for(count, [&](std::size_t i) {
    const Matrix a = bundle.measurement(i);
    const auto c = static_cast<Eigen::Index>(i);
    out.problems[i] = std::make_shared<const SensingProblem>(a, dictionary, noise_var, false);
    out.encoder_inputs.col(c) = input == EncoderInput::Raw
                                    ? Vector(bundle.observations.col(c))
                                    : least_squares_embed(bundle.observations.col(c), a);
  });
  return out;
}

}  // namespace csbayes
