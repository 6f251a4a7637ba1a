#include "csbayes/config.hpp"

#include "csbayes/error.hpp"
#include "csbayes/model_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

namespace csbayes {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

std::string unquote(const std::string& v) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
  return v;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& why) {
  fail(ErrorCode::InvalidArgument, "config key '" + key + "' = '" + value + "': " + why);
}

double to_double(const std::string& key, const std::string& raw) {
  const std::string v = unquote(trim(raw));
  if (v == "inf" || v == "+inf") return std::numeric_limits<double>::infinity();
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "not a number");
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& raw) {
  const std::string v = unquote(trim(raw));
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "not a non-negative integer");
  return out;
}

bool to_bool(const std::string& key, const std::string& raw) {
  const std::string v = unquote(trim(raw));
  if (v == "true") return true;
  if (v == "false") return false;
  bad_value(key, v, "expected true or false");
}

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

template <typename T, typename F>
std::string fmt_list(const std::vector<T>& items, F f) {
  std::string out = "[";
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += f(items[i]);
  }
  return out + "]";
}

std::string quoted(const std::string& s) { return "\"" + s + "\""; }

}  // namespace

KeyValues parse_key_values(const std::string& text) {
  KeyValues out;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string body = trim(strip_comment(line));
    if (body.empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    if (body.front() == '[' && body.find('=') == std::string::npos) {
      if (body.back() != ']') fail(ErrorCode::InvalidArgument, where + ": unterminated section header");
      section = trim(body.substr(1, body.size() - 2));
      if (section.empty()) fail(ErrorCode::InvalidArgument, where + ": empty section name");
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) fail(ErrorCode::InvalidArgument, where + ": expected key = value");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (key.empty()) fail(ErrorCode::InvalidArgument, where + ": empty key");
    const std::string full = section.empty() ? key : section + "." + key;
    if (!out.emplace(full, unquote(value)).second) {
      fail(ErrorCode::InvalidArgument, where + ": duplicate key '" + full + "'");
    }
  }
  return out;
}

std::vector<std::string> split_list(const std::string& value) {
  std::string v = trim(value);
  std::vector<std::string> out;
  if (!v.empty() && v.front() == '[') {
    if (v.back() != ']') fail(ErrorCode::InvalidArgument, "unterminated list '" + v + "'");
    v = v.substr(1, v.size() - 2);
    std::string item;
    std::istringstream in(v);
    while (std::getline(in, item, ',')) {
      item = unquote(trim(item));
      if (!item.empty()) out.push_back(item);
    }
    return out;
  }
  if (!v.empty()) out.push_back(unquote(v));
  return out;
}

std::string to_string(Estimator e) { return e == Estimator::Cme ? "cme" : "map"; }

Estimator parse_estimator(const std::string& name) {
  if (name == "cme") return Estimator::Cme;
  if (name == "map") return Estimator::Map;
  fail(ErrorCode::InvalidArgument, "unknown estimator '" + name + "'");
}

std::string to_string(MatrixMode m) { return m == MatrixMode::Shared ? "shared" : "per-sample"; }

MatrixMode parse_matrix_mode(const std::string& name) {
  if (name == "shared") return MatrixMode::Shared;
  if (name == "per-sample") return MatrixMode::PerSample;
  fail(ErrorCode::InvalidArgument, "unknown matrix mode '" + name + "'");
}

ExperimentConfig parse_config(const std::string& text) {
  const KeyValues kv = parse_key_values(text);
  ExperimentConfig c;
  using Setter = std::function<void(const std::string& key, const std::string& value)>;
  auto size = [](std::size_t& dst) -> Setter {
    return [&dst](const std::string& k, const std::string& v) { dst = static_cast<std::size_t>(to_u64(k, v)); };
  };
  auto real = [](double& dst) -> Setter { return [&dst](const std::string& k, const std::string& v) { dst = to_double(k, v); }; };
  auto text_value = [](std::string& dst) -> Setter { return [&dst](const std::string&, const std::string& v) { dst = v; }; };

  const std::map<std::string, Setter> setters = {
      {"experiment.name", text_value(c.name)},
      {"experiment.methods", [&](const std::string&, const std::string& v) { c.methods = split_list(v); }},
      {"experiment.seeds",
       [&](const std::string& k, const std::string& v) {
         c.seeds.clear();
         for (const auto& s : split_list(v)) c.seeds.push_back(to_u64(k, s));
       }},
      {"experiment.n_test", size(c.n_test)},
      {"experiment.n_val", size(c.n_val)},
      {"experiment.output_dir", text_value(c.output_dir)},
      {"experiment.timing_warmup", size(c.timing_warmup)},
      {"experiment.timing_reps", size(c.timing_reps)},
      {"dataset.kind", text_value(c.dataset.kind)},
      {"dataset.n", size(c.dataset.n)},
      {"dataset.sparsity", size(c.dataset.sparsity)},
      {"dataset.idx_path", text_value(c.dataset.idx_path)},
      {"dataset.independent_third_amplitude",
       [&](const std::string& k, const std::string& v) { c.dataset.independent_third_amplitude = to_bool(k, v); }},
      {"dataset.matrix_mode",
       [&](const std::string&, const std::string& v) { c.dataset.matrix_mode = parse_matrix_mode(v); }},
      {"dictionary.kind", [&](const std::string&, const std::string& v) { c.dictionary.kind = parse_dictionary_kind(v); }},
      {"dictionary.level",
       [&](const std::string& k, const std::string& v) { c.dictionary.level = static_cast<int>(to_u64(k, v)); }},
      {"sweep.m",
       [&](const std::string& k, const std::string& v) {
         c.m_values.clear();
         for (const auto& s : split_list(v)) c.m_values.push_back(static_cast<std::size_t>(to_u64(k, s)));
       }},
      {"sweep.n_train",
       [&](const std::string& k, const std::string& v) {
         c.n_train_values.clear();
         for (const auto& s : split_list(v)) c.n_train_values.push_back(static_cast<std::size_t>(to_u64(k, s)));
       }},
      {"sweep.snr_db",
       [&](const std::string& k, const std::string& v) {
         c.snr_db_values.clear();
         for (const auto& s : split_list(v)) c.snr_db_values.push_back(to_double(k, s));
       }},
      {"sbl.max_iters", size(c.sbl.max_iters)},
      {"sbl.tol", real(c.sbl.tol)},
      {"csgmm.components", size(c.csgmm.fit.components)},
      {"csgmm.tol", real(c.csgmm.fit.tol)},
      {"csgmm.max_iters", size(c.csgmm.fit.max_iters)},
      {"csgmm.estimator", [&](const std::string&, const std::string& v) { c.csgmm.estimator = parse_estimator(v); }},
      {"csvae.learning_rate", real(c.csvae.train.learning_rate)},
      {"csvae.batch_size", size(c.csvae.train.batch_size)},
      {"csvae.patience", size(c.csvae.train.patience)},
      {"csvae.max_epochs", size(c.csvae.train.max_epochs)},
      {"csvae.max_lr_halvings", size(c.csvae.train.max_lr_halvings)},
      {"csvae.latent_dim", size(c.csvae.latent_dim)},
      {"csvae.width_cap", size(c.csvae.width_cap)},
      {"csvae.cme_samples", size(c.csvae.cme_samples)},
      {"csvae.estimator", [&](const std::string&, const std::string& v) { c.csvae.estimator = parse_estimator(v); }},
      {"csvae.encoder_input", text_value(c.csvae.encoder_input)},
      {"lasso.lambdas",
       [&](const std::string& k, const std::string& v) {
         c.lasso.lambdas.clear();
         for (const auto& s : split_list(v)) c.lasso.lambdas.push_back(to_double(k, s));
       }},
      {"lasso.domain", [&](const std::string&, const std::string& v) { c.lasso.domain = parse_lasso_domain(v); }},
      {"lasso.max_sweeps", size(c.lasso.max_sweeps)},
      {"lasso.tol", real(c.lasso.tol)},
  };
  for (const auto& [key, value] : kv) {
    const auto it = setters.find(key);
    if (it == setters.end()) fail(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
    it->second(key, value);
  }
  validate_config(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void validate_config(const ExperimentConfig& c) {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) fail(ErrorCode::InvalidArgument, "config: " + what);
  };
  need(!c.m_values.empty(), "sweep.m is empty");
  need(!c.n_train_values.empty(), "sweep.n_train is empty");
  need(!c.snr_db_values.empty(), "sweep.snr_db is empty");
  need(!c.methods.empty(), "experiment.methods is empty");
  need(!c.seeds.empty(), "experiment.seeds must list explicit seeds");
  need(c.n_test > 0, "experiment.n_test must be positive");
  const std::set<std::string> known = {"sbl", "csgmm", "csvae", "lasso"};
  for (const auto& m : c.methods) need(known.count(m) == 1, "unknown method '" + m + "'");
  const std::set<std::string> kinds = {"piecewise", "sparse", "idx"};
  need(kinds.count(c.dataset.kind) == 1, "unknown dataset kind '" + c.dataset.kind + "'");
  need(c.dataset.kind != "idx" || !c.dataset.idx_path.empty(), "dataset.idx_path is required for idx data");
  const std::set<std::string> inputs = {"auto", "raw", "least-squares"};
  need(inputs.count(c.csvae.encoder_input) == 1, "unknown encoder input '" + c.csvae.encoder_input + "'");
  for (const auto m : c.m_values) need(m > 0, "sweep.m entries must be positive");
  for (const auto n : c.n_train_values) need(n > 0, "sweep.n_train entries must be positive");
  for (const auto l : c.lasso.lambdas) need(l >= 0.0, "lasso.lambdas must be >= 0");
  const bool trains = std::find(c.methods.begin(), c.methods.end(), "csvae") != c.methods.end() ||
                      std::find(c.methods.begin(), c.methods.end(), "lasso") != c.methods.end();
  need(!trains || c.n_val > 0, "experiment.n_val must be positive for csvae or lasso");
}

std::string canonical_config(const ExperimentConfig& c) {
  auto u = [](auto v) { return std::to_string(v); };
  std::ostringstream o;
  o << "[experiment]\n"
    << "name = " << quoted(c.name) << "\n"
    << "methods = " << fmt_list(c.methods, quoted) << "\n"
    << "seeds = " << fmt_list(c.seeds, u) << "\n"
    << "n_test = " << c.n_test << "\n"
    << "n_val = " << c.n_val << "\n"
    << "output_dir = " << quoted(c.output_dir) << "\n"
    << "timing_warmup = " << c.timing_warmup << "\n"
    << "timing_reps = " << c.timing_reps << "\n\n"
    << "[dataset]\n"
    << "kind = " << quoted(c.dataset.kind) << "\n"
    << "n = " << c.dataset.n << "\n"
    << "sparsity = " << c.dataset.sparsity << "\n"
    << "idx_path = " << quoted(c.dataset.idx_path) << "\n"
    << "independent_third_amplitude = " << (c.dataset.independent_third_amplitude ? "true" : "false") << "\n"
    << "matrix_mode = " << quoted(to_string(c.dataset.matrix_mode)) << "\n\n"
    << "[dictionary]\n"
    << "kind = " << quoted(std::string(to_string(c.dictionary.kind))) << "\n"
    << "level = " << c.dictionary.level << "\n\n"
    << "[sweep]\n"
    << "m = " << fmt_list(c.m_values, u) << "\n"
    << "n_train = " << fmt_list(c.n_train_values, u) << "\n"
    << "snr_db = " << fmt_list(c.snr_db_values, fmt) << "\n\n"
    << "[sbl]\n"
    << "max_iters = " << c.sbl.max_iters << "\n"
    << "tol = " << fmt(c.sbl.tol) << "\n\n"
    << "[csgmm]\n"
    << "components = " << c.csgmm.fit.components << "\n"
    << "tol = " << fmt(c.csgmm.fit.tol) << "\n"
    << "max_iters = " << c.csgmm.fit.max_iters << "\n"
    << "estimator = " << quoted(to_string(c.csgmm.estimator)) << "\n\n"
    << "[csvae]\n"
    << "learning_rate = " << fmt(c.csvae.train.learning_rate) << "\n"
    << "batch_size = " << c.csvae.train.batch_size << "\n"
    << "patience = " << c.csvae.train.patience << "\n"
    << "max_epochs = " << c.csvae.train.max_epochs << "\n"
    << "max_lr_halvings = " << c.csvae.train.max_lr_halvings << "\n"
    << "latent_dim = " << c.csvae.latent_dim << "\n"
    << "width_cap = " << c.csvae.width_cap << "\n"
    << "cme_samples = " << c.csvae.cme_samples << "\n"
    << "estimator = " << quoted(to_string(c.csvae.estimator)) << "\n"
    << "encoder_input = " << quoted(c.csvae.encoder_input) << "\n\n"
    << "[lasso]\n"
    << "lambdas = " << fmt_list(c.lasso.lambdas, fmt) << "\n"
    << "domain = " << quoted(to_string(c.lasso.domain)) << "\n"
    << "max_sweeps = " << c.lasso.max_sweeps << "\n"
    << "tol = " << fmt(c.lasso.tol) << "\n";
  return o.str();
}

std::uint64_t config_hash(const ExperimentConfig& c) { return fnv1a(canonical_config(c)); }

}  // namespace csbayes
