#include "csbayes/experiment.hpp"

#include "csbayes/csgmm.hpp"
#include "csbayes/csvae.hpp"
#include "csbayes/error.hpp"
#include "csbayes/lasso.hpp"
#include "csbayes/parallel.hpp"
#include "csbayes/sbl.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <tuple>

namespace csbayes {

namespace {

constexpr std::uint64_t kTrainSignals = 0x100;
constexpr std::uint64_t kValSignals = 0x101;
constexpr std::uint64_t kTestSignals = 0x102;
constexpr std::uint64_t kImageOrder = 0x103;
constexpr std::uint64_t kTrainNoise = 0x200;
constexpr std::uint64_t kValNoise = 0x201;
constexpr std::uint64_t kTestNoise = 0x202;
constexpr std::uint64_t kSharedMatrix = 0x210;
constexpr std::uint64_t kCsgmmInit = 0x300;
constexpr std::uint64_t kVaeInit = 0x310;
constexpr std::uint64_t kVaeTrain = 0x311;
constexpr std::uint64_t kVaeSampling = 0x312;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double effective_noise(const DatasetBundle& b) {
  return b.noise_var > 0.0 ? b.noise_var : surrogate_noise_variance(b.observations);
}

EncoderInput encoder_mode(const ExperimentConfig& c, const DatasetBundle& b) {
  if (c.csvae.encoder_input == "raw") return EncoderInput::Raw;
  if (c.csvae.encoder_input == "least-squares") return EncoderInput::LeastSquares;
  return b.mode == MatrixMode::PerSample ? EncoderInput::LeastSquares : EncoderInput::Raw;
}

Matrix take_columns(const Matrix& m, std::size_t count) {
  if (static_cast<std::size_t>(m.cols()) < count) fail(ErrorCode::InvalidArgument, "signal pool too small");
  return m.leftCols(static_cast<Eigen::Index>(count));
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

double time_training(const std::function<void()>& body) {
  const auto t0 = Clock::now();
  body();
  return seconds_since(t0);
}

struct Reconstructor {
  Matrix estimates;
  std::function<void(std::size_t)> single;
  std::string detail;
  double train_seconds = 0.0;
};

Reconstructor run_sbl(const ExperimentConfig& c, const CellData& d) {
  Reconstructor r;
  auto set = std::make_shared<ObservationSet>(
      make_observation_set(d.test, d.dictionary, effective_noise(d.test), EncoderInput::Raw));
  const std::size_t n = set->count();
  r.estimates.resize(d.dictionary->signal_dim(), static_cast<Eigen::Index>(n));
  parallel_for(n, [&](std::size_t i) {
    const auto col = static_cast<Eigen::Index>(i);
    r.estimates.col(col) = sbl_reconstruct(set->problem(i), set->observations.col(col), c.sbl.max_iters, c.sbl.tol).estimate;
  });
  r.single = [set, &c](std::size_t i) {
    const auto col = static_cast<Eigen::Index>(i % set->count());
    (void)sbl_reconstruct(set->problem(i % set->count()), set->observations.col(col), c.sbl.max_iters, c.sbl.tol);
  };
  return r;
}

Reconstructor run_csgmm(const ExperimentConfig& c, const CellData& d, std::uint64_t seed) {
  if (d.train.mode != MatrixMode::Shared) {
    fail(ErrorCode::InvalidArgument, "csgmm is trained under a single shared measurement matrix");
  }
  Reconstructor r;
  const auto train_p = std::make_shared<const SensingProblem>(d.train.shared_measurement, d.dictionary,
                                                              effective_noise(d.train));
  auto model = std::make_shared<GammaMixture>();
  r.train_seconds = time_training([&] {
    SeededRng rng(seed, kCsgmmInit);
    CsgmmFit f = csgmm_fit(*train_p, d.train.observations, c.csgmm.fit, rng);
    r.detail = "iterations=" + std::to_string(f.trace.iterations) + ";reseeds=" + std::to_string(f.trace.reseeds);
    *model = std::move(f.model);
  });
  auto test_p = std::make_shared<const SensingProblem>(d.test.shared_measurement, d.dictionary, effective_noise(d.test));
  r.estimates = csgmm_estimate(*model, *test_p, d.test.observations, c.csgmm.estimator);
  const Matrix ys = d.test.observations;
  const Estimator which = c.csgmm.estimator;
  r.single = [model, test_p, ys, which](std::size_t i) {
    const Vector y = ys.col(static_cast<Eigen::Index>(i % static_cast<std::size_t>(ys.cols())));
    (void)(which == Estimator::Cme ? csgmm_estimate_cme(*model, *test_p, y) : csgmm_estimate_map(*model, *test_p, y));
  };
  return r;
}

Reconstructor run_csvae(const ExperimentConfig& c, const CellData& d, std::uint64_t seed) {
  Reconstructor r;
  const EncoderInput mode = encoder_mode(c, d.train);
  auto params = std::make_shared<VaeParams>();
  r.train_seconds = time_training([&] {
    const ObservationSet train = make_observation_set(d.train, d.dictionary, effective_noise(d.train), mode);
    const ObservationSet val = make_observation_set(d.validation, d.dictionary, effective_noise(d.validation), mode);
    const auto arch = VaeArchitecture::make(static_cast<std::size_t>(train.encoder_inputs.rows()), c.csvae.latent_dim,
                                            static_cast<std::size_t>(d.dictionary->coeff_dim()), c.csvae.width_cap);
    SeededRng init_rng(seed, kVaeInit);
    *params = init_vae(arch, mode, init_rng);
    TrainConfig tc = c.csvae.train;
    tc.seed = mix_seed(seed, kVaeTrain);
    tc.objective = TrainObjective::Evidence;
    const TrainHistory h = fit(*params, tc, train, val);
    r.detail = "epochs=" + std::to_string(h.val_elbo.size()) + ";best_epoch=" + std::to_string(h.best_epoch) +
               ";halvings=" + std::to_string(h.halvings);
  });
  auto test = std::make_shared<ObservationSet>(make_observation_set(d.test, d.dictionary, effective_noise(d.test), mode));
  const std::size_t n = test->count();
  const std::uint64_t sampling = mix_seed(seed, kVaeSampling);
  const std::size_t draws = c.csvae.cme_samples;
  const Estimator which = c.csvae.estimator;
  auto estimate = [params, test, sampling, draws, which](std::size_t i) {
    const auto col = static_cast<Eigen::Index>(i);
    const Vector y = test->observations.col(col);
    const Vector in = test->encoder_inputs.col(col);
    if (which == Estimator::Map) return csvae_estimate_map(*params, test->problem(i), in, y);
    SeededRng rng(sampling, i);
    return csvae_estimate_cme(*params, test->problem(i), in, y, draws, rng);
  };
  r.estimates.resize(d.dictionary->signal_dim(), static_cast<Eigen::Index>(n));
  parallel_for(n, [&](std::size_t i) { r.estimates.col(static_cast<Eigen::Index>(i)) = estimate(i); });
  r.single = [estimate, n](std::size_t i) { (void)estimate(i % n); };
  return r;
}

Reconstructor run_lasso(const ExperimentConfig& c, const CellData& d) {
  Reconstructor r;
  LassoConfig lc;
  lc.domain = c.lasso.domain;
  lc.max_sweeps = c.lasso.max_sweeps;
  lc.tol = c.lasso.tol;
  const bool images = d.test.image_height > 0;
  r.train_seconds = time_training([&] {
    const LassoTuneResult tuned = lasso_tune(c.lasso.lambdas, [&](double lambda) {
      LassoConfig trial = lc;
      trial.lambda = lambda;
      Matrix est = lasso_reconstruct(d.validation, *d.dictionary, trial);
      if (images) est = clip_unit(est);
      return nmse(est, d.validation.signals).mean_nmse;
    });
    lc.lambda = tuned.lambda;
  });
  r.detail = "lambda=" + format_real(lc.lambda);
  r.estimates = lasso_reconstruct(d.test, *d.dictionary, lc);
  auto test = std::make_shared<DatasetBundle>(d.test);
  auto dict = d.dictionary;
  r.single = [test, dict, lc](std::size_t i) {
    const std::size_t k = i % test->count();
    const Matrix a = test->measurement(k);
    const Matrix op = lc.domain == LassoDomain::Pixel ? a : Matrix(a * dict->matrix);
    (void)LassoSolver(op).solve(test->observations.col(static_cast<Eigen::Index>(k)), lc);
  };
  return r;
}

}  // namespace

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

Matrix generate_signals(const DatasetSpec& spec, const Dictionary& dictionary, std::size_t count, SeededRng& rng) {
  if (spec.kind == "piecewise") {
    PiecewiseSmoothSpec ps;
    ps.n = spec.n;
    ps.independent_third_amplitude = spec.independent_third_amplitude;
    return generate_piecewise_smooth(ps, count, rng);
  }
  if (spec.kind == "sparse") {
    const auto s = static_cast<std::size_t>(dictionary.coeff_dim());
    if (spec.sparsity == 0 || spec.sparsity > s) fail(ErrorCode::InvalidArgument, "sparsity must be in [1, S]");
    Matrix out(dictionary.signal_dim(), static_cast<Eigen::Index>(count));
    for (std::size_t i = 0; i < count; ++i) {
      SeededRng local = rng.split(i);
      const auto support = local.permutation(s);
      Vector coeffs = Vector::Zero(static_cast<Eigen::Index>(s));
      for (std::size_t k = 0; k < spec.sparsity; ++k) coeffs(static_cast<Eigen::Index>(support[k])) = local.normal();
      out.col(static_cast<Eigen::Index>(i)) = dictionary.synthesize(coeffs);
    }
    return out;
  }
  fail(ErrorCode::InvalidArgument, "dataset kind '" + spec.kind + "' is not generated");
}

std::shared_ptr<const Dictionary> make_dictionary(const DictionarySpec& spec, const std::vector<std::size_t>& shape) {
  return std::make_shared<const Dictionary>(build_dictionary(spec.kind, shape, spec.level));
}

SignalPool make_signal_pool(const ExperimentConfig& c, std::uint64_t seed) {
  SignalPool pool;
  const std::size_t n_train = *std::max_element(c.n_train_values.begin(), c.n_train_values.end());
  if (c.dataset.kind == "idx") {
    const IdxImages images = load_idx_images(c.dataset.idx_path);
    const std::size_t need = n_train + c.n_val + c.n_test;
    if (images.count < need) {
      fail(ErrorCode::InvalidArgument, "idx file holds " + std::to_string(images.count) + " images, sweep needs " +
                                           std::to_string(need));
    }
    pool.image_height = images.height;
    pool.image_width = images.width;
    pool.dictionary = make_dictionary(c.dictionary, {images.height, images.width});
    SeededRng order_rng(seed, kImageOrder);
    const auto order = order_rng.permutation(images.count);
    auto gather = [&](std::size_t start, std::size_t count) {
      Matrix m(images.pixels.rows(), static_cast<Eigen::Index>(count));
      for (std::size_t j = 0; j < count; ++j) {
        m.col(static_cast<Eigen::Index>(j)) = images.pixels.col(static_cast<Eigen::Index>(order[start + j]));
      }
      return m;
    };
    pool.test = gather(0, c.n_test);
    pool.validation = gather(c.n_test, c.n_val);
    pool.train = gather(c.n_test + c.n_val, n_train);
    return pool;
  }
  pool.dictionary = make_dictionary(c.dictionary, {c.dataset.n});
  SeededRng train_rng(seed, kTrainSignals);
  SeededRng val_rng(seed, kValSignals);
  SeededRng test_rng(seed, kTestSignals);
  pool.train = generate_signals(c.dataset, *pool.dictionary, n_train, train_rng);
  if (c.n_val > 0) pool.validation = generate_signals(c.dataset, *pool.dictionary, c.n_val, val_rng);
  pool.test = generate_signals(c.dataset, *pool.dictionary, c.n_test, test_rng);
  return pool;
}

CellData make_cell_data(const ExperimentConfig& c, const SignalPool& pool, std::size_t m, std::size_t n_train,
                        double snr_db, std::uint64_t seed) {
  CellData d;
  d.dictionary = pool.dictionary;
  const std::string kind = c.dataset.kind;
  const auto n = static_cast<std::size_t>(pool.dictionary->signal_dim());
  if (m >= n) fail(ErrorCode::BadDimensions, "m must be smaller than the signal length");
  const Matrix train = take_columns(pool.train, n_train);
  if (c.dataset.matrix_mode == MatrixMode::Shared) {
    SeededRng matrix_rng(mix_seed(seed, kSharedMatrix), m);
    const Matrix a = draw_measurement_matrix(m, n, matrix_rng);
    d.train = make_bundle_with_matrix(train, a, snr_db, mix_seed(seed, kTrainNoise), kind);
    if (pool.validation.cols() > 0) {
      d.validation = make_bundle_with_matrix(pool.validation, a, snr_db, mix_seed(seed, kValNoise), kind);
    }
    d.test = make_bundle_with_matrix(pool.test, a, snr_db, mix_seed(seed, kTestNoise), kind);
  } else {
    d.train = make_bundle(train, m, snr_db, MatrixMode::PerSample, mix_seed(seed, kTrainNoise), kind);
    if (pool.validation.cols() > 0) {
      d.validation = make_bundle(pool.validation, m, snr_db, MatrixMode::PerSample, mix_seed(seed, kValNoise), kind);
    }
    d.test = make_bundle(pool.test, m, snr_db, MatrixMode::PerSample, mix_seed(seed, kTestNoise), kind);
  }
  for (DatasetBundle* b : {&d.train, &d.validation, &d.test}) {
    b->image_height = pool.image_height;
    b->image_width = pool.image_width;
  }
  return d;
}

double median_call_ms(const std::function<void(std::size_t)>& call, std::size_t warmup, std::size_t reps) {
  if (reps == 0) return 0.0;
  for (std::size_t i = 0; i < warmup; ++i) call(i);
  std::vector<double> times(reps);
  for (std::size_t i = 0; i < reps; ++i) {
    const auto t0 = Clock::now();
    call(warmup + i);
    times[i] = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  }
  std::sort(times.begin(), times.end());
  return reps % 2 ? times[reps / 2] : 0.5 * (times[reps / 2 - 1] + times[reps / 2]);
}

MethodOutcome run_method(const ExperimentConfig& c, const std::string& method, const CellData& d, std::uint64_t seed) {
  Reconstructor r;
  if (method == "sbl") {
    r = run_sbl(c, d);
  } else if (method == "csgmm") {
    r = run_csgmm(c, d, seed);
  } else if (method == "csvae") {
    r = run_csvae(c, d, seed);
  } else if (method == "lasso") {
    r = run_lasso(c, d);
  } else {
    fail(ErrorCode::InvalidArgument, "unknown method '" + method + "'");
  }
  MethodOutcome out;
  const bool images = d.test.image_height > 0;
  out.estimates = images ? clip_unit(r.estimates) : std::move(r.estimates);
  out.report = nmse(out.estimates, d.test.signals);
  if (images) add_ssim(out.report, out.estimates, d.test.signals, d.test.image_height, d.test.image_width);
  out.report.method = method;
  out.report.config_hash = config_hash(c);
  out.train_seconds = r.train_seconds;
  out.detail = r.detail;
  out.reconstruct_ms = median_call_ms(r.single, c.timing_warmup, c.timing_reps);
  out.report.runtime_ms = out.reconstruct_ms;
  return out;
}

SweepResult run_sweep(const ExperimentConfig& c, const SweepOptions& options) {
  validate_config(c);
  SweepResult result;
  for (const auto seed : c.seeds) {
    std::optional<SignalPool> pool;
    std::string pool_error;
    try {
      pool = make_signal_pool(c, seed);
    } catch (const std::exception& e) {
      pool_error = e.what();
    }
    for (const double snr : c.snr_db_values) {
      for (const auto m : c.m_values) {
        for (const auto n_train : c.n_train_values) {
          std::optional<CellData> data;
          std::string data_error = pool_error;
          if (pool) {
            try {
              data = make_cell_data(c, *pool, m, n_train, snr, seed);
            } catch (const std::exception& e) {
              data_error = e.what();
            }
          }
          for (const auto& method : c.methods) {
            CellResult cell;
            cell.key = {method, m, n_train, snr, seed};
            if (!data) {
              cell.error = data_error;
            } else {
              try {
                cell.outcome = run_method(c, method, *data, seed);
                cell.ok = true;
              } catch (const std::exception& e) {
                cell.error = e.what();
              }
            }
            cell.outcome.estimates.resize(0, 0);
            if (options.on_cell) options.on_cell(cell);
            result.cells.push_back(std::move(cell));
          }
        }
      }
    }
  }
  if (options.write_files) {
    const std::filesystem::path dir(c.output_dir);
    std::filesystem::create_directories(dir);
    result.results_path = (dir / "results.csv").string();
    result.summary_path = (dir / "summary.csv").string();
    result.timings_path = (dir / "timings.csv").string();
    result.manifest_path = (dir / "manifest.json").string();
    write_text(result.results_path, results_csv(result.cells, c));
    write_text(result.summary_path, summary_csv(result.cells));
    write_text(result.timings_path, timings_csv(result.cells, c));
    write_text(result.manifest_path, manifest_json(result.cells, c));
  }
  return result;
}

std::string results_csv(const std::vector<CellResult>& cells, const ExperimentConfig& c) {
  std::ostringstream o;
  o << "method,dataset,m,n_train,snr_db,seed,n_test,mean_nmse,std_nmse,mean_ssim,std_ssim,status,detail,error\n";
  const bool images = c.dataset.kind == "idx";
  for (const auto& cell : cells) {
    const auto& r = cell.outcome.report;
    o << cell.key.method << ',' << c.dataset.kind << ',' << cell.key.m << ',' << cell.key.n_train << ','
      << format_real(cell.key.snr_db) << ',' << cell.key.seed << ',' << r.nmse.size() << ',';
    if (cell.ok) {
      o << format_real(r.mean_nmse) << ',' << format_real(r.std_nmse) << ',';
      if (images) {
        o << format_real(r.mean_ssim) << ',' << format_real(r.std_ssim);
      } else {
        o << ',';
      }
    } else {
      o << ",,,";
    }
    o << ',' << (cell.ok ? "ok" : "failed") << ',' << csv_field(cell.outcome.detail) << ',' << csv_field(cell.error)
      << '\n';
  }
  return o.str();
}

std::string summary_csv(const std::vector<CellResult>& cells) {
  using Key = std::tuple<std::string, std::size_t, std::size_t, double>;
  std::vector<Key> order;
  std::map<Key, std::vector<const CellResult*>> groups;
  for (const auto& cell : cells) {
    const Key k{cell.key.method, cell.key.m, cell.key.n_train, cell.key.snr_db};
    if (!groups.count(k)) order.push_back(k);
    groups[k].push_back(&cell);
  }
  std::ostringstream o;
  o << "method,m,n_train,snr_db,seeds_ok,seeds_failed,mean_nmse,std_nmse_over_seeds,std_nmse_over_samples,"
       "mean_ssim,std_ssim_over_seeds\n";
  for (const auto& k : order) {
    std::vector<double> seed_means, seed_ssim, pooled;
    std::size_t failed = 0;
    for (const auto* cell : groups[k]) {
      if (!cell->ok) {
        ++failed;
        continue;
      }
      const auto& r = cell->outcome.report;
      seed_means.push_back(r.mean_nmse);
      if (!r.ssim.empty()) seed_ssim.push_back(r.mean_ssim);
      pooled.insert(pooled.end(), r.nmse.begin(), r.nmse.end());
    }
    o << std::get<0>(k) << ',' << std::get<1>(k) << ',' << std::get<2>(k) << ',' << format_real(std::get<3>(k)) << ','
      << seed_means.size() << ',' << failed << ',';
    if (seed_means.empty()) {
      o << ",,,,\n";
      continue;
    }
    o << format_real(mean_of(seed_means)) << ',' << format_real(std_of(seed_means)) << ','
      << format_real(std_of(pooled)) << ',';
    if (seed_ssim.empty()) {
      o << ",\n";
    } else {
      o << format_real(mean_of(seed_ssim)) << ',' << format_real(std_of(seed_ssim)) << '\n';
    }
  }
  return o.str();
}

std::string timings_csv(const std::vector<CellResult>& cells, const ExperimentConfig& c) {
  std::ostringstream o;
  o << "method,m,n_train,snr_db,seed,train_seconds,reconstruct_ms_median,warmup_calls,timed_calls\n";
  for (const auto& cell : cells) {
    if (!cell.ok) continue;
    o << cell.key.method << ',' << cell.key.m << ',' << cell.key.n_train << ',' << format_real(cell.key.snr_db) << ','
      << cell.key.seed << ',' << format_real(cell.outcome.train_seconds) << ','
      << format_real(cell.outcome.reconstruct_ms) << ',' << c.timing_warmup << ',' << c.timing_reps << '\n';
  }
  return o.str();
}

std::string manifest_json(const std::vector<CellResult>& cells, const ExperimentConfig& c) {
  nlohmann::json j;
  std::ostringstream hash;
  hash << std::hex << config_hash(c);
  j["name"] = c.name;
  j["config_hash"] = hash.str();
  j["config_text"] = canonical_config(c);
  nlohmann::json flat = nlohmann::json::object();
  for (const auto& [k, v] : parse_key_values(canonical_config(c))) flat[k] = v;
  j["config"] = flat;
  j["files"] = {{"results", "results.csv"}, {"summary", "summary.csv"}, {"timings", "timings.csv"}};
  j["cells"] = cells.size();
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& cell : cells) {
    if (cell.ok) continue;
    failures.push_back({{"method", cell.key.method},
                        {"m", cell.key.m},
                        {"n_train", cell.key.n_train},
                        {"snr_db", format_real(cell.key.snr_db)},
                        {"seed", cell.key.seed},
                        {"error", cell.error}});
  }
  j["failures"] = failures;
  return j.dump(2) + "\n";
}

}  // namespace csbayes
