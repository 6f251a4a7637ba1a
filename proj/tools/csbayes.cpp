// csbayes command-line front end.

#include "csbayes/audit.hpp"
#include "csbayes/config.hpp"
#include "csbayes/csgmm.hpp"
#include "csbayes/csvae.hpp"
#include "csbayes/dataset_io.hpp"
#include "csbayes/error.hpp"
#include "csbayes/experiment.hpp"
#include "csbayes/lasso.hpp"
#include "csbayes/metrics.hpp"
#include "csbayes/model_io.hpp"
#include "csbayes/parallel.hpp"
#include "csbayes/sbl.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <iomanip>
#include <optional>
#include <iostream>
#include <sstream>

using namespace csbayes;

namespace {

std::vector<std::size_t> bundle_shape(const DatasetBundle& b) {
  if (b.image_height > 0) return {b.image_height, b.image_width};
  return {b.n()};
}

std::string join_shape(const std::vector<std::size_t>& shape) {
  std::string s;
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? "x" : "") + std::to_string(shape[i]);
  return s;
}

double bundle_noise(const DatasetBundle& b) {
  return b.noise_var > 0.0 ? b.noise_var : surrogate_noise_variance(b.observations);
}

struct GenArgs {
  std::string kind = "piecewise";
  std::size_t n = 256;
  std::size_t sparsity = 8;
  std::string idx_path;
  std::size_t count = 1000;
  std::size_t offset = 0;
  double snr_db = 10.0;
  std::size_t m = 100;
  std::uint64_t seed = 7;
  std::optional<std::uint64_t> matrix_seed;
  std::string mode = "per-sample";
  std::string dictionary = "db4-1d";
  int level = 0;
  bool independent_third = false;
  std::string out;
};

void run_gen_data(const GenArgs& a) {
  DatasetSpec spec;
  spec.kind = a.kind;
  spec.n = a.n;
  spec.sparsity = a.sparsity;
  spec.independent_third_amplitude = a.independent_third;
  Matrix signals;
  std::size_t h = 0, w = 0;
  if (a.kind == "idx") {
    const IdxImages images = load_idx_images(a.idx_path);
    if (a.offset + a.count > images.count) fail(ErrorCode::InvalidArgument, "idx file has too few images");
    signals = images.pixels.middleCols(static_cast<Eigen::Index>(a.offset), static_cast<Eigen::Index>(a.count));
    h = images.height;
    w = images.width;
  } else {
    const Dictionary dict = build_dictionary(parse_dictionary_kind(a.dictionary), {a.n}, a.level);
    SeededRng rng(a.seed, 0x100);
    signals = generate_signals(spec, dict, a.count, rng);
  }
  DatasetBundle b;
  if (parse_matrix_mode(a.mode) == MatrixMode::Shared) {
    SeededRng matrix_rng(a.matrix_seed.value_or(a.seed), 1);
    const Matrix meas = draw_measurement_matrix(a.m, static_cast<std::size_t>(signals.rows()), matrix_rng);
    b = make_bundle_with_matrix(signals, meas, a.snr_db, mix_seed(a.seed, a.offset + 1), a.kind);
  } else {
    b = make_bundle(signals, a.m, a.snr_db, MatrixMode::PerSample, a.matrix_seed.value_or(a.seed), a.kind);
  }
  b.image_height = h;
  b.image_width = w;
  save_bundle(a.out, b);
  std::cout << "wrote " << b.count() << " observations (m=" << b.m() << ", n=" << b.n()
            << ", noise_var=" << format_real(b.noise_var) << ") to " << a.out << "\n";
}

struct TrainArgs {
  std::string method = "csvae";
  std::string data;
  std::string val_data;
  std::string dictionary = "db4-1d";
  int level = 0;
  std::uint64_t seed = 1;
  std::size_t components = 32;
  std::size_t max_iters = 500;
  double tol = 1e-3;
  double lr = 2e-5;
  std::size_t batch = 64;
  std::size_t epochs = 200;
  std::size_t patience = 5;
  std::size_t latent = 16;
  std::size_t width_cap = 128;
  std::string encoder_input = "auto";
  std::string out;
};

/// Every setting that shapes the trained model, in a fixed order; the
/// model's config hash is taken over this text.
std::string train_settings(const TrainArgs& a, int level) {
  std::ostringstream o;
  o << "method=" << a.method << ";data=" << a.data << ";val_data=" << a.val_data << ";dictionary=" << a.dictionary
    << ";level=" << level << ";seed=" << a.seed << ";components=" << a.components << ";max_iters=" << a.max_iters
    << ";tol=" << format_real(a.tol) << ";lr=" << format_real(a.lr) << ";batch=" << a.batch << ";epochs=" << a.epochs
    << ";patience=" << a.patience << ";latent=" << a.latent << ";width_cap=" << a.width_cap
    << ";encoder_input=" << a.encoder_input;
  return o.str();
}

std::string hex_hash(std::uint64_t h) {
  std::ostringstream o;
  o << std::hex << std::setw(16) << std::setfill('0') << h;
  return o.str();
}

void run_train(const TrainArgs& a) {
  const DatasetBundle train = load_bundle(a.data);
  const auto shape = bundle_shape(train);
  const auto dict = std::make_shared<const Dictionary>(
      build_dictionary(parse_dictionary_kind(a.dictionary), shape, a.level));
  ModelHeader header;
  header.config_hash = fnv1a(train_settings(a, dict->level));
  header.meta = {{"dictionary", a.dictionary},
                 {"level", std::to_string(dict->level)},
                 {"shape", join_shape(shape)},
                 {"noise_var", format_real(bundle_noise(train))},
                 {"data", a.data}};

  if (a.method == "csgmm") {
    if (train.mode != MatrixMode::Shared) fail(ErrorCode::InvalidArgument, "csgmm needs a shared-matrix bundle");
    const SensingProblem p(train.shared_measurement, dict, bundle_noise(train));
    CsgmmFitOptions opts{a.components, a.tol, a.max_iters};
    SeededRng rng(a.seed, 0x300);
    const CsgmmFit fit = csgmm_fit(p, train.observations, opts, rng);
    save_model(a.out, fit.model, header);
    std::cout << "config hash " << hex_hash(header.config_hash) << "\n";
    std::cout << "csgmm: " << fit.trace.iterations << " iterations, log-evidence "
              << format_real(fit.trace.log_evidence.back()) << (fit.trace.converged ? " (converged)" : "") << "\n";
    return;
  }
  if (a.method != "csvae") fail(ErrorCode::InvalidArgument, "train supports csgmm and csvae");
  EncoderInput mode = train.mode == MatrixMode::PerSample ? EncoderInput::LeastSquares : EncoderInput::Raw;
  if (a.encoder_input == "raw") mode = EncoderInput::Raw;
  if (a.encoder_input == "least-squares") mode = EncoderInput::LeastSquares;
  ObservationSet all = make_observation_set(train, dict, bundle_noise(train), mode);
  ObservationSet tr, val;
  if (!a.val_data.empty()) {
    tr = std::move(all);
    const DatasetBundle vb = load_bundle(a.val_data);
    val = make_observation_set(vb, dict, bundle_noise(vb), mode);
  } else {
    const std::size_t n_val = std::max<std::size_t>(1, all.count() / 10);
    std::vector<std::size_t> head, tail;
    for (std::size_t i = 0; i < all.count(); ++i) (i + n_val < all.count() ? head : tail).push_back(i);
    tr = all.select(head);
    val = all.select(tail);
  }
  const auto arch = VaeArchitecture::make(static_cast<std::size_t>(tr.encoder_inputs.rows()), a.latent,
                                          static_cast<std::size_t>(dict->coeff_dim()), a.width_cap);
  SeededRng init(a.seed, 0x310);
  VaeParams params = init_vae(arch, mode, init);
  TrainConfig tc;
  tc.learning_rate = a.lr;
  tc.batch_size = a.batch;
  tc.max_epochs = a.epochs;
  tc.patience = a.patience;
  tc.seed = mix_seed(a.seed, 0x311);
  const TrainHistory h = fit(params, tc, tr, val);
  save_model(a.out, params, header);
  std::cout << "config hash " << hex_hash(header.config_hash) << "\n";
  std::cout << "csvae: " << h.val_elbo.size() << " epochs, best validation ELBO "
            << format_real(h.val_elbo[h.best_epoch]) << " at epoch " << h.best_epoch << "\n";
}

struct ReconArgs {
  std::string method = "sbl";
  std::string data;
  std::string model;
  std::string dictionary = "db4-1d";
  int level = 0;
  double lambda = 0.1;
  std::string domain = "dictionary";
  std::string estimator = "cme";
  std::size_t samples = 64;
  std::uint64_t seed = 1;
  std::size_t max_iters = 200;
  double tol = 1e-3;
  std::string expect_hash;
  std::string out;
};

void run_reconstruct(const ReconArgs& a) {
  const DatasetBundle b = load_bundle(a.data);
  const auto shape = bundle_shape(b);
  std::string dict_name = a.dictionary;
  int level = a.level;
  if (!a.model.empty()) {
    const ModelHeader h = read_model_header(a.model);
    if (h.meta.count("dictionary")) dict_name = h.meta.at("dictionary");
    if (h.meta.count("level")) level = std::stoi(h.meta.at("level"));
    if (h.meta.count("shape") && h.meta.at("shape") != join_shape(shape)) {
      std::cerr << "warning: model was trained on shape " << h.meta.at("shape") << ", data has " << join_shape(shape)
                << "\n";
    }
    if (!a.expect_hash.empty() && a.expect_hash != hex_hash(h.config_hash)) {
      std::cerr << "warning: model config hash " << hex_hash(h.config_hash) << " differs from expected "
                << a.expect_hash << "\n";
    }
  }
  const auto dict = std::make_shared<const Dictionary>(build_dictionary(parse_dictionary_kind(dict_name), shape, level));
  const double noise = bundle_noise(b);
  const Estimator which = parse_estimator(a.estimator);
  Matrix est(dict->signal_dim(), static_cast<Eigen::Index>(b.count()));

  if (a.method == "lasso") {
    LassoConfig lc;
    lc.lambda = a.lambda;
    lc.domain = parse_lasso_domain(a.domain);
    est = lasso_reconstruct(b, *dict, lc);
  } else if (a.method == "sbl") {
    const ObservationSet set = make_observation_set(b, dict, noise, EncoderInput::Raw);
    parallel_for(b.count(), [&](std::size_t i) {
      const auto c = static_cast<Eigen::Index>(i);
      est.col(c) = sbl_reconstruct(set.problem(i), set.observations.col(c), a.max_iters, a.tol).estimate;
    });
  } else if (a.method == "csgmm") {
    const LoadedMixture m = load_mixture(a.model);
    const ObservationSet set = make_observation_set(b, dict, noise, EncoderInput::Raw);
    parallel_for(b.count(), [&](std::size_t i) {
      const auto c = static_cast<Eigen::Index>(i);
      const Vector y = set.observations.col(c);
      est.col(c) = which == Estimator::Cme ? csgmm_estimate_cme(m.model, set.problem(i), y)
                                           : csgmm_estimate_map(m.model, set.problem(i), y);
    });
  } else if (a.method == "csvae") {
    const LoadedVae v = load_vae(a.model);
    const ObservationSet set = make_observation_set(b, dict, noise, v.model.input_mode);
    parallel_for(b.count(), [&](std::size_t i) {
      const auto c = static_cast<Eigen::Index>(i);
      const Vector y = set.observations.col(c);
      const Vector in = set.encoder_inputs.col(c);
      SeededRng rng(a.seed, i);
      est.col(c) = which == Estimator::Cme ? csvae_estimate_cme(v.model, set.problem(i), in, y, a.samples, rng)
                                           : csvae_estimate_map(v.model, set.problem(i), in, y);
    });
  } else {
    fail(ErrorCode::InvalidArgument, "unknown method '" + a.method + "'");
  }
  if (b.image_height > 0) est = clip_unit(est);
  save_matrix(a.out, est);
  std::cout << "wrote " << est.cols() << " estimates to " << a.out << "\n";
}

void run_evaluate(const std::string& data, const std::string& estimates, bool json) {
  const DatasetBundle b = load_bundle(data);
  const Matrix est = load_matrix(estimates);
  MetricReport r = nmse(b.image_height > 0 ? clip_unit(est) : est, b.signals);
  if (b.image_height > 0) add_ssim(r, est, b.signals, b.image_height, b.image_width);
  if (json) {
    nlohmann::json j = {{"count", r.nmse.size()}, {"mean_nmse", r.mean_nmse}, {"std_nmse", r.std_nmse}};
    if (!r.ssim.empty()) {
      j["mean_ssim"] = r.mean_ssim;
      j["std_ssim"] = r.std_ssim;
    }
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::cout << "samples   " << r.nmse.size() << "\n"
            << "nMSE      " << format_real(r.mean_nmse) << " (std " << format_real(r.std_nmse) << ")\n";
  if (!r.ssim.empty()) std::cout << "SSIM      " << format_real(r.mean_ssim) << " (std " << format_real(r.std_ssim) << ")\n";
}

int run_sweep_cmd(const std::string& path, const std::string& output_dir, bool quiet) {
  ExperimentConfig c = load_config(path);
  if (!output_dir.empty()) c.output_dir = output_dir;
  SweepOptions opts;
  if (!quiet) {
    opts.on_cell = [](const CellResult& cell) {
      std::cerr << cell.key.method << " m=" << cell.key.m << " n_train=" << cell.key.n_train
                << " snr=" << format_real(cell.key.snr_db) << " seed=" << cell.key.seed << ": "
                << (cell.ok ? "nMSE " + format_real(cell.outcome.report.mean_nmse) : "FAILED " + cell.error) << "\n";
    };
  }
  const SweepResult r = run_sweep(c, opts);
  std::size_t failed = 0;
  for (const auto& cell : r.cells) failed += cell.ok ? 0 : 1;
  std::cout << r.cells.size() << " cells, " << failed << " failed; results in " << c.output_dir << "\n";
  return failed == 0 ? 0 : 3;
}

int run_audit(const std::string& path, std::size_t draws, std::uint64_t seed) {
  const ModelHeader h = read_model_header(path);
  SeededRng rng(seed, 0x400);
  AuditReport r;
  if (h.kind == "csgmm") {
    r = audit_sparsity_bound(load_mixture(path).model, draws, rng);
  } else {
    r = audit_sparsity_bound(load_vae(path).model, draws, rng);
  }
  std::cout << h.kind << ": " << r.violations << " violations over " << r.draws
            << " draws (max log ratio " << format_real(r.max_log_ratio) << ")\n";
  return r.violations == 0 ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compressive sensing with Bayesian generative priors"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen-data", "Generate, measure and corrupt a dataset");
  g->add_option("--kind", gen.kind, "piecewise | sparse | idx")->check(CLI::IsMember({"piecewise", "sparse", "idx"}));
  g->add_option("--n", gen.n, "Signal length");
  g->add_option("--sparsity", gen.sparsity, "Nonzero coefficients (sparse)");
  g->add_option("--idx", gen.idx_path, "IDX image file (idx)");
  g->add_option("--n-train,--count", gen.count, "Number of signals");
  g->add_option("--offset", gen.offset, "First image index (idx)");
  g->add_option("--snr-db", gen.snr_db, "Signal-to-noise ratio in dB");
  g->add_option("--m", gen.m, "Measurements per signal");
  g->add_option("--seed", gen.seed, "Signals and noise");
  g->add_option("--matrix-seed", gen.matrix_seed, "Measurement matrices (default: --seed)");
  g->add_option("--mode", gen.mode, "shared | per-sample");
  g->add_option("--dictionary,--dict", gen.dictionary, "Dictionary for sparse signals");
  g->add_option("--level", gen.level);
  g->add_flag("--independent-third-amplitude", gen.independent_third);
  g->add_option("--out", gen.out)->required();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Fit a CSGMM or CSVAE on compressed observations");
  t->add_option("--method", tr.method)->check(CLI::IsMember({"csgmm", "csvae"}));
  t->add_option("--data", tr.data)->required();
  t->add_option("--val-data", tr.val_data, "Validation bundle (default: last 10% of --data)");
  t->add_option("--dictionary,--dict", tr.dictionary);
  t->add_option("--level", tr.level);
  t->add_option("--seed", tr.seed);
  t->add_option("--components,--k", tr.components);
  t->add_option("--max-iters", tr.max_iters);
  t->add_option("--tol", tr.tol);
  t->add_option("--lr", tr.lr);
  t->add_option("--batch-size,--batch", tr.batch);
  t->add_option("--epochs", tr.epochs);
  t->add_option("--patience", tr.patience);
  t->add_option("--latent-dim,--latent", tr.latent);
  t->add_option("--width-cap", tr.width_cap);
  t->add_option("--encoder-input", tr.encoder_input)->check(CLI::IsMember({"auto", "raw", "least-squares"}));
  t->add_option("--out", tr.out)->required();

  ReconArgs rc;
  auto* r = app.add_subcommand("reconstruct", "Estimate signals from observations");
  r->add_option("--method", rc.method)->check(CLI::IsMember({"sbl", "csgmm", "csvae", "lasso"}));
  r->add_option("--data", rc.data)->required();
  r->add_option("--model", rc.model);
  r->add_option("--dictionary,--dict", rc.dictionary);
  r->add_option("--level", rc.level);
  r->add_option("--lambda", rc.lambda);
  r->add_option("--domain", rc.domain)->check(CLI::IsMember({"pixel", "dictionary"}));
  r->add_option("--estimator", rc.estimator)->check(CLI::IsMember({"cme", "map"}));
  r->add_option("--samples", rc.samples, "Latent draws for the CSVAE CME");
  r->add_option("--seed", rc.seed);
  r->add_option("--max-iters", rc.max_iters, "SBL iteration budget");
  r->add_option("--tol", rc.tol, "SBL log-evidence tolerance");
  r->add_option("--expect-hash", rc.expect_hash, "Warn when the model's config hash differs");
  r->add_option("--out", rc.out)->required();

  std::string eval_data, eval_est;
  bool eval_json = false;
  auto* e = app.add_subcommand("evaluate", "nMSE (and SSIM for images) of saved estimates");
  e->add_option("--data", eval_data)->required();
  e->add_option("--estimates", eval_est)->required();
  e->add_flag("--json", eval_json);

  std::string sweep_cfg, sweep_out;
  bool sweep_quiet = false;
  auto* s = app.add_subcommand("sweep", "Run a configured grid of experiments");
  s->add_option("--config", sweep_cfg)->required();
  s->add_option("--output-dir", sweep_out);
  s->add_flag("--quiet", sweep_quiet);

  std::string audit_model;
  std::size_t audit_draws = 10000;
  std::uint64_t audit_seed = 1;
  auto* au = app.add_subcommand("audit-bound", "Check sampled prior densities against the sparsity bound");
  au->add_option("--model", audit_model)->required();
  au->add_option("--draws", audit_draws);
  au->add_option("--seed", audit_seed);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*g) run_gen_data(gen);
    if (*t) run_train(tr);
    if (*r) run_reconstruct(rc);
    if (*e) run_evaluate(eval_data, eval_est, eval_json);
    if (*s) return run_sweep_cmd(sweep_cfg, sweep_out, sweep_quiet);
    if (*au) return run_audit(audit_model, audit_draws, audit_seed);
  } catch (const Error& err) {
    std::cerr << "error [" << to_string(err.code()) << "]: " << err.what() << "\n";
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  }
  return 0;
}
