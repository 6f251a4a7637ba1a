#pragma once

#include "csbayes/csgmm.hpp"
#include "csbayes/csvae.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

namespace csbayes {

/// Model container (little-endian):
///   "CSBMODEL" | version u64 | kind string | config_hash u64 |
///   meta count u64 | (key, value) strings | payload | FNV-1a of all
///   preceding bytes (u64)
/// Payload for "csgmm": weights, gammas. For "csvae": input, latent and
/// coefficient widths, hidden widths, input mode, then each layer matrix.
inline constexpr std::uint64_t kModelVersion = 1;

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);

struct ModelHeader {
  std::string kind;  // "csgmm" or "csvae"
  std::uint64_t version = kModelVersion;
  std::uint64_t config_hash = 0;
  std::map<std::string, std::string> meta;
};

struct LoadedMixture {
  ModelHeader header;
  GammaMixture model;
};

struct LoadedVae {
  ModelHeader header;
  VaeParams model;
};

void save_model(const std::string& path, const GammaMixture& model, const ModelHeader& header);
void save_model(const std::string& path, const VaeParams& model, const ModelHeader& header);

/// Throws Io, VersionMismatch, Corrupt (bad magic, truncation, checksum
/// failure, or a different model kind).
LoadedMixture load_mixture(const std::string& path);
LoadedVae load_vae(const std::string& path);
ModelHeader read_model_header(const std::string& path);

/// In-memory forms used by the file functions.
std::string serialize_model(const GammaMixture& model, const ModelHeader& header);
std::string serialize_model(const VaeParams& model, const ModelHeader& header);
LoadedMixture parse_mixture(const std::string& bytes);
LoadedVae parse_vae(const std::string& bytes);

}  // namespace csbayes
