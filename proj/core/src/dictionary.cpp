#include "csbayes/dictionary.hpp"

#include "csbayes/error.hpp"
#include "csbayes/wavelet.hpp"

#include <algorithm>
#include <string>

namespace csbayes {

std::string_view to_string(DictionaryKind kind) {
  switch (kind) {
    case DictionaryKind::Identity: return "identity";
    case DictionaryKind::Db4_1d: return "db4-1d";
    case DictionaryKind::Db4_2d: return "db4-2d";
    case DictionaryKind::BlockDiagonal: return "block-diagonal";
  }
  return "unknown";
}

DictionaryKind parse_dictionary_kind(std::string_view name) {
  if (name == "identity" || name == "pixel") return DictionaryKind::Identity;
  if (name == "db4-1d") return DictionaryKind::Db4_1d;
  if (name == "db4-2d") return DictionaryKind::Db4_2d;
  if (name == "block-diagonal") return DictionaryKind::BlockDiagonal;
  fail(ErrorCode::InvalidArgument, "unknown dictionary kind '" + std::string(name) + "'");
}

Vector Dictionary::analyze(const Vector& signal) const {
  if (signal.size() != signal_dim()) fail(ErrorCode::DimensionMismatch, "analyze: signal length differs");
  switch (kind) {
    case DictionaryKind::Identity: return signal;
    case DictionaryKind::Db4_1d: return wavedec(signal, level);
    case DictionaryKind::Db4_2d: return wavedec2(signal, shape[0], shape[1], level, level);
    case DictionaryKind::BlockDiagonal: {
      Vector out(coeff_dim());
      Eigen::Index in_pos = 0;
      Eigen::Index out_pos = 0;
      for (const auto& b : blocks) {
        out.segment(out_pos, b.coeff_dim()) = b.analyze(signal.segment(in_pos, b.signal_dim()));
        in_pos += b.signal_dim();
        out_pos += b.coeff_dim();
      }
      return out;
    }
  }
  fail(ErrorCode::InvalidArgument, "analyze: unknown dictionary kind");
}

Dictionary build_db4_1d(std::size_t n, int level) {
  if (n < WaveletFilterBank::kTaps) fail(ErrorCode::BadDimensions, "db4 dictionary needs n >= 8");
  if (level <= 0) level = default_level(n);
  const std::size_t s = coefficient_count(n, level);
  Dictionary d;
  d.kind = DictionaryKind::Db4_1d;
  d.level = level;
  d.shape = {n};
  d.matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(s));
  Vector unit = Vector::Zero(static_cast<Eigen::Index>(s));
  for (Eigen::Index j = 0; j < unit.size(); ++j) {
    unit(j) = 1.0;
    d.matrix.col(j) = waverec(unit, n, level);
    unit(j) = 0.0;
  }
  return d;
}

Dictionary build_db4_2d(std::size_t h, std::size_t w, int level) {
  if (h < WaveletFilterBank::kTaps || w < WaveletFilterBank::kTaps) {
    fail(ErrorCode::BadDimensions, "db4 2D dictionary needs h, w >= 8");
  }
  if (level <= 0) level = default_level(std::min(h, w));
  const Dictionary dh = build_db4_1d(h, level);
  const Dictionary dw = build_db4_1d(w, level);
  Dictionary d;
  d.kind = DictionaryKind::Db4_2d;
  d.level = level;
  d.shape = {h, w};
  // row-major vec(Dh C Dwᵀ) = (Dh ⊗ Dw) vec(C)
  d.matrix = Matrix(dh.matrix.rows() * dw.matrix.rows(), dh.matrix.cols() * dw.matrix.cols());
  for (Eigen::Index i = 0; i < dh.matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < dh.matrix.cols(); ++j) {
      d.matrix.block(i * dw.matrix.rows(), j * dw.matrix.cols(), dw.matrix.rows(), dw.matrix.cols()) =
          dh.matrix(i, j) * dw.matrix;
    }
  }
  return d;
}

Dictionary build_block_diagonal(const std::vector<Dictionary>& blocks) {
  if (blocks.empty()) fail(ErrorCode::EmptyInput, "block-diagonal dictionary needs at least one block");
  if (blocks.size() == 1) return blocks.front();
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  for (const auto& b : blocks) {
    rows += b.signal_dim();
    cols += b.coeff_dim();
  }
  Dictionary d;
  d.kind = DictionaryKind::BlockDiagonal;
  d.level = blocks.front().level;
  d.shape = {static_cast<std::size_t>(rows)};
  d.blocks = blocks;
  d.matrix = Matrix::Zero(rows, cols);
  Eigen::Index r = 0;
  Eigen::Index c = 0;
  for (const auto& b : blocks) {
    d.matrix.block(r, c, b.signal_dim(), b.coeff_dim()) = b.matrix;
    r += b.signal_dim();
    c += b.coeff_dim();
  }
  return d;
}

Dictionary build_identity(std::size_t n) {
  if (n < 1) fail(ErrorCode::BadDimensions, "identity dictionary needs n >= 1");
  Dictionary d;
  d.kind = DictionaryKind::Identity;
  d.shape = {n};
  d.matrix = Matrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  return d;
}

Dictionary build_dictionary(DictionaryKind kind, const std::vector<std::size_t>& shape, int level,
                            std::size_t channels) {
  if (shape.empty()) fail(ErrorCode::BadDimensions, "dictionary shape is empty");
  std::size_t n = 1;
  for (auto s : shape) n *= s;
  Dictionary one;
  switch (kind) {
    case DictionaryKind::Identity: one = build_identity(n); break;
    case DictionaryKind::Db4_1d: one = build_db4_1d(n, level); break;
    case DictionaryKind::Db4_2d:
      if (shape.size() != 2) fail(ErrorCode::BadDimensions, "db4-2d needs a {h, w} shape");
      one = build_db4_2d(shape[0], shape[1], level);
      break;
    case DictionaryKind::BlockDiagonal:
      fail(ErrorCode::InvalidArgument, "block-diagonal is built from a channel count, not a kind");
  }
  if (channels <= 1) return one;
  return build_block_diagonal(std::vector<Dictionary>(channels, one));
}

}  // namespace csbayes
