#pragma once

#include "csbayes/csgmm.hpp"
#include "csbayes/csvae.hpp"
#include "csbayes/dictionary.hpp"
#include "csbayes/lasso.hpp"
#include "csbayes/sensing.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace csbayes {

/// Flat view of a TOML-style file: "[section]" headers prefix the keys that
/// follow ("section.key"). Values are kept as written, minus quotes for
/// strings. Lists use brackets: m = [80, 100, 140].
using KeyValues = std::map<std::string, std::string>;

/// Throws InvalidArgument with the line number on malformed or duplicate keys.
KeyValues parse_key_values(const std::string& text);

/// Splits "[a, b, c]" (or a single bare value) into trimmed items.
std::vector<std::string> split_list(const std::string& value);

struct DatasetSpec {
  std::string kind = "piecewise";  // piecewise | sparse | idx
  std::size_t n = 256;             // signal length (piecewise, sparse)
  std::size_t sparsity = 8;        // nonzero dictionary coefficients (sparse)
  std::string idx_path;            // image file (idx)
  bool independent_third_amplitude = false;
  MatrixMode matrix_mode = MatrixMode::PerSample;
};

struct DictionarySpec {
  DictionaryKind kind = DictionaryKind::Db4_1d;
  int level = 0;  // 0 picks the default depth
};

struct SblSettings {
  std::size_t max_iters = 200;
  double tol = 1e-3;
};

struct CsgmmSettings {
  CsgmmFitOptions fit;
  Estimator estimator = Estimator::Cme;
};

struct CsvaeSettings {
  TrainConfig train;
  std::size_t latent_dim = 16;
  std::size_t width_cap = 128;
  std::size_t cme_samples = 64;
  Estimator estimator = Estimator::Cme;
  std::string encoder_input = "auto";  // auto | raw | least-squares
};

struct LassoSettings {
  std::vector<double> lambdas = {1e-3, 3e-3, 1e-2, 3e-2, 1e-1};
  LassoDomain domain = LassoDomain::Dictionary;
  std::size_t max_sweeps = 5000;
  double tol = 1e-8;
};

struct ExperimentConfig {
  std::string name = "experiment";
  DatasetSpec dataset;
  DictionarySpec dictionary;
  std::vector<std::size_t> m_values;
  std::vector<std::size_t> n_train_values;
  std::vector<double> snr_db_values;
  std::vector<std::string> methods;  // sbl | csgmm | csvae | lasso
  std::vector<std::uint64_t> seeds;
  std::size_t n_test = 1000;
  std::size_t n_val = 200;
  std::string output_dir = "results";
  std::size_t timing_warmup = 10;
  std::size_t timing_reps = 100;
  SblSettings sbl;
  CsgmmSettings csgmm;
  CsvaeSettings csvae;
  LassoSettings lasso;
};

/// Throws InvalidArgument on unknown keys, bad values, or empty axes.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
void validate_config(const ExperimentConfig& config);

/// Round-trippable text with every key written out in a fixed order.
std::string canonical_config(const ExperimentConfig& config);
/// FNV-1a of the canonical text.
std::uint64_t config_hash(const ExperimentConfig& config);

std::string to_string(Estimator e);
Estimator parse_estimator(const std::string& name);
std::string to_string(MatrixMode m);
MatrixMode parse_matrix_mode(const std::string& name);

}  // namespace csbayes
