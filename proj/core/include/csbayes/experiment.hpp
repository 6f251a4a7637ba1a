#pragma once

#include "csbayes/config.hpp"
#include "csbayes/metrics.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace csbayes {

/// Signal generator for the dataset kinds a config can name. `dictionary`
/// is only used by the sparse kind (x = D s).
Matrix generate_signals(const DatasetSpec& spec, const Dictionary& dictionary, std::size_t count, SeededRng& rng);

/// Dictionary for a dataset spec; image data uses its own height/width.
std::shared_ptr<const Dictionary> make_dictionary(const DictionarySpec& spec, const std::vector<std::size_t>& shape);

/// Train, validation and test splits of one grid point. Signals depend on
/// the seed only, so grid points that differ in m, n_train or SNR see the
/// same underlying signals (train sets are nested prefixes).
struct CellData {
  std::shared_ptr<const Dictionary> dictionary;
  DatasetBundle train;
  DatasetBundle validation;
  DatasetBundle test;
};

struct CellKey {
  std::string method;
  std::size_t m = 0;
  std::size_t n_train = 0;
  double snr_db = 0.0;
  std::uint64_t seed = 0;
};

/// Pool of signals shared by every grid point of a seed.
struct SignalPool {
  std::shared_ptr<const Dictionary> dictionary;
  Matrix train;  // N x max(n_train)
  Matrix validation;
  Matrix test;
  std::size_t image_height = 0;
  std::size_t image_width = 0;
};

SignalPool make_signal_pool(const ExperimentConfig& config, std::uint64_t seed);
CellData make_cell_data(const ExperimentConfig& config, const SignalPool& pool, std::size_t m, std::size_t n_train,
                        double snr_db, std::uint64_t seed);

struct MethodOutcome {
  MetricReport report;
  Matrix estimates;
  double train_seconds = 0.0;
  double reconstruct_ms = 0.0;  // median per reconstruction, 0 when timing is off
  std::string detail;           // e.g. the tuned lambda
};

/// Trains (when the method needs it) and reconstructs the test split.
/// Throws on failure; run_sweep turns that into a failed row.
MethodOutcome run_method(const ExperimentConfig& config, const std::string& method, const CellData& data,
                         std::uint64_t seed);

struct CellResult {
  CellKey key;
  bool ok = false;
  std::string error;
  MethodOutcome outcome;
};

struct SweepResult {
  std::vector<CellResult> cells;
  std::string results_path;
  std::string summary_path;
  std::string timings_path;
  std::string manifest_path;
};

struct SweepOptions {
  bool write_files = true;
  std::function<void(const CellResult&)> on_cell;  // progress hook
};

/// Every method x m x n_train x snr x seed cell in a fixed order. Writes
/// results.csv (metrics only, deterministic), summary.csv (seed-level
/// spread), timings.csv and manifest.json into the output directory.
SweepResult run_sweep(const ExperimentConfig& config, const SweepOptions& options = {});

std::string results_csv(const std::vector<CellResult>& cells, const ExperimentConfig& config);
std::string summary_csv(const std::vector<CellResult>& cells);
std::string timings_csv(const std::vector<CellResult>& cells, const ExperimentConfig& config);
std::string manifest_json(const std::vector<CellResult>& cells, const ExperimentConfig& config);

/// Median wall time in milliseconds of `reps` calls after `warmup` calls.
double median_call_ms(const std::function<void(std::size_t)>& call, std::size_t warmup, std::size_t reps);

/// Shortest round-trip decimal form.
std::string format_real(double v);

}  // namespace csbayes
