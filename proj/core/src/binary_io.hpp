#pragma once

// Little-endian stream helpers shared by the dataset and model containers.

#include "csbayes/error.hpp"
#include "csbayes/linalg.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

namespace csbayes::detail {

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  template <typename T>
  void put(T v) {
    v = to_little(v);
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void put_u64(std::uint64_t v) { put(v); }
  void put_f64(double v) { put(v); }
  void put_string(const std::string& s) {
    put_u64(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void put_matrix(const Matrix& m) {
    put_u64(static_cast<std::uint64_t>(m.rows()));
    put_u64(static_cast<std::uint64_t>(m.cols()));
    // row-major on disk
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) put_f64(m(r, c));
  }
  void raw(const char* data, std::size_t n) { out_.write(data, static_cast<std::streamsize>(n)); }
  bool ok() const { return static_cast<bool>(out_); }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  Reader(std::istream& in, ErrorCode truncated) : in_(in), truncated_(truncated) {}

  template <typename T>
  T get() {
    T v{};
    in_.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in_) fail(truncated_, "unexpected end of file");
    return to_little(v);
  }
  std::uint64_t get_u64() { return get<std::uint64_t>(); }
  double get_f64() { return get<double>(); }
  std::string get_string(std::uint64_t max_len = 1 << 20) {
    const auto n = get_u64();
    if (n > max_len) fail(truncated_, "string length out of range");
    std::string s(n, '\0');
    in_.read(s.data(), static_cast<std::streamsize>(n));
    if (!in_) fail(truncated_, "unexpected end of file");
    return s;
  }
  Matrix get_matrix(std::uint64_t max_entries = std::uint64_t{1} << 32) {
    const auto rows = get_u64();
    const auto cols = get_u64();
    if (rows != 0 && cols > max_entries / rows) fail(truncated_, "matrix shape out of range");
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = get_f64();
    return m;
  }
  void raw(char* data, std::size_t n) {
    in_.read(data, static_cast<std::streamsize>(n));
    if (!in_) fail(truncated_, "unexpected end of file");
  }
  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
  std::istream& in_;
  ErrorCode truncated_;
};

}  // namespace csbayes::detail
