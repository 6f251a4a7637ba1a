#include "csbayes/model_io.hpp"

#include "binary_io.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>

namespace csbayes {

namespace {

constexpr std::array<char, 8> kModelMagic = {'C', 'S', 'B', 'M', 'O', 'D', 'E', 'L'};
constexpr std::uint64_t kMaxWidth = std::uint64_t{1} << 24;

void write_header(detail::Writer& w, const ModelHeader& h, const std::string& kind) {
  w.raw(kModelMagic.data(), kModelMagic.size());
  w.put_u64(kModelVersion);
  w.put_string(kind);
  w.put_u64(h.config_hash);
  w.put_u64(h.meta.size());
  for (const auto& [k, v] : h.meta) {
    w.put_string(k);
    w.put_string(v);
  }
}

std::string seal(std::ostringstream& body) {
  std::string bytes = body.str();
  std::ostringstream tail;
  detail::Writer w(tail);
  w.put_u64(fnv1a(bytes));
  return bytes + tail.str();
}

/// Verifies the checksum and returns a stream positioned after the header.
ModelHeader open_sealed(const std::string& bytes, std::istringstream& in) {
  if (bytes.size() < kModelMagic.size() + 8) fail(ErrorCode::Corrupt, "model file too short");
  if (!std::equal(kModelMagic.begin(), kModelMagic.end(), bytes.begin())) {
    fail(ErrorCode::Corrupt, "not a model file");
  }
  {
    std::istringstream probe(bytes.substr(kModelMagic.size(), 8));
    detail::Reader r(probe, ErrorCode::Corrupt);
    const auto version = r.get_u64();
    if (version != kModelVersion) {
      fail(ErrorCode::VersionMismatch, "model version " + std::to_string(version) + " is not supported");
    }
  }
  if (bytes.size() < kModelMagic.size() + 16) fail(ErrorCode::Corrupt, "model file too short");
  const std::string body = bytes.substr(0, bytes.size() - 8);
  std::istringstream tail(bytes.substr(bytes.size() - 8));
  detail::Reader tr(tail, ErrorCode::Corrupt);
  if (tr.get_u64() != fnv1a(body)) fail(ErrorCode::Corrupt, "model checksum mismatch");

  in.str(body);
  detail::Reader r(in, ErrorCode::Corrupt);
  std::array<char, 8> magic{};
  r.raw(magic.data(), magic.size());
  ModelHeader h;
  h.version = r.get_u64();
  h.kind = r.get_string();
  h.config_hash = r.get_u64();
  const auto n_meta = r.get_u64();
  if (n_meta > 4096) fail(ErrorCode::Corrupt, "metadata count out of range");
  for (std::uint64_t i = 0; i < n_meta; ++i) {
    std::string k = r.get_string();
    h.meta[k] = r.get_string();
  }
  return h;
}

void expect_kind(const ModelHeader& h, const std::string& kind) {
  if (h.kind != kind) fail(ErrorCode::Corrupt, "model file holds '" + h.kind + "', expected '" + kind + "'");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::Io, "write failed for " + path);
}

std::size_t get_width(detail::Reader& r) {
  const auto v = r.get_u64();
  if (v == 0 || v > kMaxWidth) fail(ErrorCode::Corrupt, "layer width out of range");
  return static_cast<std::size_t>(v);
}

}  // namespace

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string serialize_model(const GammaMixture& model, const ModelHeader& header) {
  validate_mixture(model);
  std::ostringstream body;
  detail::Writer w(body);
  write_header(w, header, "csgmm");
  w.put_matrix(model.weights);
  w.put_matrix(model.gammas);
  return seal(body);
}

std::string serialize_model(const VaeParams& model, const ModelHeader& header) {
  std::ostringstream body;
  detail::Writer w(body);
  write_header(w, header, "csvae");
  const auto& a = model.arch;
  w.put_u64(a.input_dim);
  w.put_u64(a.latent_dim);
  w.put_u64(a.coeff_dim);
  w.put_u64(a.encoder_hidden[0]);
  w.put_u64(a.encoder_hidden[1]);
  w.put_u64(a.decoder_hidden[0]);
  w.put_u64(a.decoder_hidden[1]);
  w.put_u64(model.input_mode == EncoderInput::Raw ? 0 : 1);
  w.put_u64(model.layers.size());
  for (const auto& l : model.layers) w.put_matrix(l.value);
  return seal(body);
}

LoadedMixture parse_mixture(const std::string& bytes) {
  std::istringstream in;
  LoadedMixture out;
  out.header = open_sealed(bytes, in);
  expect_kind(out.header, "csgmm");
  detail::Reader r(in, ErrorCode::Corrupt);
  const Matrix weights = r.get_matrix();
  if (weights.cols() != 1) fail(ErrorCode::Corrupt, "mixture weights are not a column");
  out.model.weights = weights;
  out.model.gammas = r.get_matrix();
  if (out.model.gammas.cols() != out.model.weights.rows()) fail(ErrorCode::Corrupt, "mixture shapes disagree");
  if (!r.at_end()) fail(ErrorCode::Corrupt, "trailing bytes in mixture payload");
  return out;
}

LoadedVae parse_vae(const std::string& bytes) {
  std::istringstream in;
  LoadedVae out;
  out.header = open_sealed(bytes, in);
  expect_kind(out.header, "csvae");
  detail::Reader r(in, ErrorCode::Corrupt);
  VaeArchitecture a;
  a.input_dim = get_width(r);
  a.latent_dim = get_width(r);
  a.coeff_dim = get_width(r);
  a.encoder_hidden[0] = get_width(r);
  a.encoder_hidden[1] = get_width(r);
  a.decoder_hidden[0] = get_width(r);
  a.decoder_hidden[1] = get_width(r);
  const auto mode = r.get_u64();
  if (mode > 1) fail(ErrorCode::Corrupt, "unknown encoder input mode");
  out.model = zero_vae(a, mode == 0 ? EncoderInput::Raw : EncoderInput::LeastSquares);
  if (r.get_u64() != out.model.layers.size()) fail(ErrorCode::Corrupt, "layer count mismatch");
  for (auto& l : out.model.layers) {
    Matrix m = r.get_matrix();
    if (m.rows() != l.value.rows() || m.cols() != l.value.cols()) {
      fail(ErrorCode::Corrupt, "layer " + l.name + " has the wrong shape");
    }
    l.value = std::move(m);
  }
  if (!r.at_end()) fail(ErrorCode::Corrupt, "trailing bytes in network payload");
  return out;
}

void save_model(const std::string& path, const GammaMixture& model, const ModelHeader& header) {
  write_file(path, serialize_model(model, header));
}

void save_model(const std::string& path, const VaeParams& model, const ModelHeader& header) {
  write_file(path, serialize_model(model, header));
}

LoadedMixture load_mixture(const std::string& path) { return parse_mixture(read_file(path)); }
LoadedVae load_vae(const std::string& path) { return parse_vae(read_file(path)); }

ModelHeader read_model_header(const std::string& path) {
  std::istringstream in;
  return open_sealed(read_file(path), in);
}

}  // namespace csbayes
