#pragma once

#include "csbayes/sensing.hpp"

#include <string>

namespace csbayes {

/// Bundle container layout (all integers u64, reals f64, little-endian):
///   "CSBDATA\0" | version | kind string | mode | matrix_seed | noise_var |
///   snr_db | image_height | image_width | signals | coefficients |
///   observations | shared_measurement
/// Strings are length-prefixed; matrices are (rows, cols, row-major values).
inline constexpr std::uint64_t kDatasetVersion = 1;

/// Throws Io on write failure.
void save_bundle(const std::string& path, const DatasetBundle& bundle);

/// Throws Io, BadMagic, VersionMismatch, TruncatedFile.
DatasetBundle load_bundle(const std::string& path);

/// Single matrix with the same header style ("CSBMATX\0", version).
void save_matrix(const std::string& path, const Matrix& m);
Matrix load_matrix(const std::string& path);

}  // namespace csbayes
