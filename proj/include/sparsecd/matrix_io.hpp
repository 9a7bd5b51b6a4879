#pragma once

#include "sparsecd/sensing_matrix.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <type_traits>

namespace sparsecd {

// Binary layout: "SCDM", u64 M, u64 N, u32 kind, then M*N (re, im) f64 pairs
// in row-major order, all little-endian.
inline constexpr char kMatrixMagic[4] = {'S', 'C', 'D', 'M'};

namespace detail {

template <class T>
void put_le(std::ostream& os, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
  unsigned char buf[sizeof(T)];
  is.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (!is) throw Error(ErrorKind::invalid_input, "truncated matrix file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

inline MatrixKind kind_from_tag(std::uint32_t tag) {
  if (tag >= kMatrixKindNames.size()) throw Error(ErrorKind::invalid_input, "unknown matrix kind tag");
  return kMatrixKindNames[tag].first;
}

inline std::uint32_t tag_of(MatrixKind kind) {
  for (std::uint32_t i = 0; i < kMatrixKindNames.size(); ++i)
    if (kMatrixKindNames[i].first == kind) return i;
  return static_cast<std::uint32_t>(kMatrixKindNames.size() - 1);
}

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw Error(ErrorKind::invalid_input, "bad number '" + s + "' in matrix file");
  return v;
}

}  // namespace detail

inline void write_matrix_binary(std::ostream& os, const SensingMatrix& A) {
  os.write(kMatrixMagic, 4);
  detail::put_le<std::uint64_t>(os, static_cast<std::uint64_t>(A.rows()));
  detail::put_le<std::uint64_t>(os, static_cast<std::uint64_t>(A.cols()));
  detail::put_le<std::uint32_t>(os, detail::tag_of(A.kind()));
  for (Index i = 0; i < A.rows(); ++i)
    for (Index j = 0; j < A.cols(); ++j) {
      detail::put_le<double>(os, A.data()(i, j).real());
      detail::put_le<double>(os, A.data()(i, j).imag());
    }
}

inline SensingMatrix read_matrix_binary(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMatrixMagic, 4) != 0) throw Error(ErrorKind::invalid_input, "not a matrix file");
  const auto M = detail::get_le<std::uint64_t>(is);
  const auto N = detail::get_le<std::uint64_t>(is);
  const MatrixKind kind = detail::kind_from_tag(detail::get_le<std::uint32_t>(is));
  constexpr std::uint64_t kMaxEntries = std::uint64_t{1} << 31;
  if (M == 0 || N == 0 || M > kMaxEntries / N) throw Error(ErrorKind::invalid_input, "implausible matrix dimensions");
  CMat data(static_cast<Index>(M), static_cast<Index>(N));
  for (Index i = 0; i < data.rows(); ++i)
    for (Index j = 0; j < data.cols(); ++j) {
      const double re = detail::get_le<double>(is);
      const double im = detail::get_le<double>(is);
      data(i, j) = {re, im};
    }
  return SensingMatrix(std::move(data), kind);
}

/// Text format: "sparsecd-matrix <kind> M N" then one row per line of
/// space-separated "re im" pairs, printed with shortest round-trip digits.
inline void write_matrix_text(std::ostream& os, const SensingMatrix& A) {
  os << "sparsecd-matrix " << to_string(A.kind()) << ' ' << A.rows() << ' ' << A.cols() << '\n';
  for (Index i = 0; i < A.rows(); ++i) {
    for (Index j = 0; j < A.cols(); ++j) {
      if (j) os << "  ";
      os << detail::format_double(A.data()(i, j).real()) << ' ' << detail::format_double(A.data()(i, j).imag());
    }
    os << '\n';
  }
}

inline SensingMatrix read_matrix_text(std::istream& is) {
  std::string tag, kind_name;
  Index M = 0, N = 0;
  if (!(is >> tag >> kind_name >> M >> N) || tag != "sparsecd-matrix" || M < 1 || N < 1)
    throw Error(ErrorKind::invalid_input, "bad text matrix header");
  const MatrixKind kind = matrix_kind_from_string(kind_name);
  CMat data(M, N);
  std::string re, im;
  for (Index i = 0; i < M; ++i)
    for (Index j = 0; j < N; ++j) {
      if (!(is >> re >> im)) throw Error(ErrorKind::invalid_input, "truncated text matrix");
      data(i, j) = {detail::parse_double(re), detail::parse_double(im)};
    }
  return SensingMatrix(std::move(data), kind);
}

inline bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

/// Files ending in ".txt" use the text format, anything else binary.
inline void save_matrix(const std::string& path, const SensingMatrix& A) {
  const bool text = has_suffix(path, ".txt");
  std::ofstream os(path, text ? std::ios::out : std::ios::out | std::ios::binary);
  if (!os) throw Error(ErrorKind::config, "cannot open '" + path + "' for writing");
  if (text)
    write_matrix_text(os, A);
  else
    write_matrix_binary(os, A);
  if (!os) throw Error(ErrorKind::config, "failed writing '" + path + "'");
}

inline SensingMatrix load_matrix(const std::string& path) {
  const bool text = has_suffix(path, ".txt");
  std::ifstream is(path, text ? std::ios::in : std::ios::in | std::ios::binary);
  if (!is) throw Error(ErrorKind::config, "cannot open matrix file '" + path + "'");
  return text ? read_matrix_text(is) : read_matrix_binary(is);
}

}  // namespace sparsecd
