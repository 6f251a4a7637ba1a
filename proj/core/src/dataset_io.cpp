#include "csbayes/dataset_io.hpp"

#include "binary_io.hpp"

#include <array>
#include <fstream>

namespace csbayes {

namespace {

constexpr std::array<char, 8> kBundleMagic = {'C', 'S', 'B', 'D', 'A', 'T', 'A', '\0'};
constexpr std::array<char, 8> kMatrixMagic = {'C', 'S', 'B', 'M', 'A', 'T', 'X', '\0'};

void check_magic(detail::Reader& r, const std::array<char, 8>& expected) {
  std::array<char, 8> got{};
  r.raw(got.data(), got.size());
  if (got != expected) fail(ErrorCode::BadMagic, "unexpected file magic");
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path);
  return in;
}

}  // namespace

void save_bundle(const std::string& path, const DatasetBundle& b) {
  auto out = open_out(path);
  detail::Writer w(out);
  w.raw(kBundleMagic.data(), kBundleMagic.size());
  w.put_u64(kDatasetVersion);
  w.put_string(b.kind);
  w.put_u64(b.mode == MatrixMode::Shared ? 0 : 1);
  w.put_u64(b.matrix_seed);
  w.put_f64(b.noise_var);
  w.put_f64(b.snr_db);
  w.put_u64(b.image_height);
  w.put_u64(b.image_width);
  w.put_matrix(b.signals);
  w.put_matrix(b.coefficients);
  w.put_matrix(b.observations);
  w.put_matrix(b.shared_measurement);
  if (!w.ok()) fail(ErrorCode::Io, "write failed for " + path);
}

DatasetBundle load_bundle(const std::string& path) {
  auto in = open_in(path);
  detail::Reader r(in, ErrorCode::TruncatedFile);
  check_magic(r, kBundleMagic);
  const auto version = r.get_u64();
  if (version != kDatasetVersion) {
    fail(ErrorCode::VersionMismatch, "dataset version " + std::to_string(version) + " is not supported");
  }
  DatasetBundle b;
  b.kind = r.get_string();
  b.mode = r.get_u64() == 0 ? MatrixMode::Shared : MatrixMode::PerSample;
  b.matrix_seed = r.get_u64();
  b.noise_var = r.get_f64();
  b.snr_db = r.get_f64();
  b.image_height = r.get_u64();
  b.image_width = r.get_u64();
  b.signals = r.get_matrix();
  b.coefficients = r.get_matrix();
  b.observations = r.get_matrix();
  b.shared_measurement = r.get_matrix();
  return b;
}

void save_matrix(const std::string& path, const Matrix& m) {
  auto out = open_out(path);
  detail::Writer w(out);
  w.raw(kMatrixMagic.data(), kMatrixMagic.size());
  w.put_u64(kDatasetVersion);
  w.put_matrix(m);
  if (!w.ok()) fail(ErrorCode::Io, "write failed for " + path);
}

Matrix load_matrix(const std::string& path) {
  auto in = open_in(path);
  detail::Reader r(in, ErrorCode::TruncatedFile);
  check_magic(r, kMatrixMagic);
  const auto version = r.get_u64();
  if (version != kDatasetVersion) fail(ErrorCode::VersionMismatch, "matrix file version not supported");
  return r.get_matrix();
}

}  // namespace csbayes
