#pragma once

#include "csbayes/linalg.hpp"

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace csbayes {

enum class DictionaryKind { Identity, Db4_1d, Db4_2d, BlockDiagonal };

std::string_view to_string(DictionaryKind kind);
/// Accepts "identity", "db4-1d", "db4-2d", "block-diagonal"; throws InvalidArgument.
DictionaryKind parse_dictionary_kind(std::string_view name);

/// Dense synthesis matrix (N x S) plus what is needed to run the matching
/// analysis transform directly, without touching the matrix.
struct Dictionary {
  Matrix matrix;
  DictionaryKind kind = DictionaryKind::Identity;
  int level = 0;
  std::vector<std::size_t> shape;  // {n} or {h, w}
  std::vector<Dictionary> blocks;  // only for BlockDiagonal

  Eigen::Index signal_dim() const { return matrix.rows(); }
  Eigen::Index coeff_dim() const { return matrix.cols(); }

  Vector synthesize(const Vector& coeffs) const { return matrix * coeffs; }

  /// Filter-bank analysis; D * analyze(x) == x for every kind.
  Vector analyze(const Vector& signal) const;
};

/// Throws BadDimensions for n < 8 and LevelTooDeep for an infeasible level.
/// level <= 0 picks default_level(n).
Dictionary build_db4_1d(std::size_t n, int level = 0);
Dictionary build_db4_2d(std::size_t h, std::size_t w, int level = 0);
/// Throws EmptyInput for an empty list.
Dictionary build_block_diagonal(const std::vector<Dictionary>& blocks);
Dictionary build_identity(std::size_t n);

/// Convenience used by the CLI: kind name, signal shape, level, channel count.
Dictionary build_dictionary(DictionaryKind kind, const std::vector<std::size_t>& shape, int level,
                            std::size_t channels = 1);

}  // namespace csbayes
