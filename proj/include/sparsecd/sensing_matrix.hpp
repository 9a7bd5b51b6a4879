#pragma once

#include "sparsecd/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <string_view>
#include <utility>

namespace sparsecd {

enum class MatrixKind { unitary, sic_povm, mub, amub, dft_rows, gaussian, bernoulli, gold_augmented, custom };

inline constexpr std::array<std::pair<MatrixKind, std::string_view>, 9> kMatrixKindNames{{
    {MatrixKind::unitary, "unitary"},
    {MatrixKind::sic_povm, "sic_povm"},
    {MatrixKind::mub, "mub"},
    {MatrixKind::amub, "amub"},
    {MatrixKind::dft_rows, "dft_rows"},
    {MatrixKind::gaussian, "gaussian"},
    {MatrixKind::bernoulli, "bernoulli"},
    {MatrixKind::gold_augmented, "gold_augmented"},
    {MatrixKind::custom, "custom"},
}};

inline std::string_view to_string(MatrixKind kind) {
  for (const auto& [k, name] : kMatrixKindNames)
    if (k == kind) return name;
  return "custom";
}

inline MatrixKind matrix_kind_from_string(std::string_view name) {
  for (const auto& [k, n] : kMatrixKindNames)
    if (n == name) return k;
  throw Error(ErrorKind::config, "unknown matrix kind '" + std::string(name) + "'");
}

/// Maximum normalized inner-product magnitude over distinct column pairs.
/// The Gram matrix is formed in column blocks so wide matrices never
/// materialize an N x N buffer.
inline double coherence(const CMat& A) {
  const Index n = A.cols();
  detail::require(n >= 2, ErrorKind::invalid_input, "coherence needs at least two columns");
  const RVec norms = A.colwise().norm().transpose();
  for (Index j = 0; j < n; ++j)
    detail::require(norms(j) > 0.0, ErrorKind::invalid_input, "coherence of a zero column");

  constexpr Index kBlock = 512;
  double best = 0.0;
  for (Index j0 = 1; j0 < n; j0 += kBlock) {
    const Index width = std::min(kBlock, n - j0);
    const Index rows = j0 + width;  // columns 0..rows-1 against block j0..j0+width-1
    const CMat G = A.leftCols(rows).adjoint() * A.middleCols(j0, width);
    for (Index c = 0; c < width; ++c) {
      const Index j = j0 + c;
      for (Index i = 0; i < j; ++i) best = std::max(best, std::abs(G(i, c)) / (norms(i) * norms(j)));
    }
  }
  return best;
}

/// Column-normalizes a copy of `A`.
inline CMat normalize_columns(CMat A) {
  for (Index j = 0; j < A.cols(); ++j) {
    const double n = A.col(j).norm();
    detail::require(n > 0.0, ErrorKind::numeric, "cannot normalize a zero column");
    A.col(j) /= n;
  }
  return A;
}

/// An M x N sensing matrix with unit-norm columns and its cached mutual
/// coherence. Immutable once built.
class SensingMatrix {
 public:
  static constexpr double kUnitNormTol = 1e-10;

  /// Takes `data` as is; throws unless every column is unit norm.
  SensingMatrix(CMat data, MatrixKind kind) : data_(std::move(data)), kind_(kind) {
    check_columns();
    coherence_ = data_.cols() >= 2 ? sparsecd::coherence(data_) : 0.0;
  }

  static SensingMatrix normalized(CMat data, MatrixKind kind) {
    return SensingMatrix(normalize_columns(std::move(data)), kind);
  }

  /// For constructions whose coherence follows from structure and was
  /// computed by a cheaper exact route (see augment_with_offsets).
  static SensingMatrix with_coherence(CMat data, MatrixKind kind, double known_coherence) {
    SensingMatrix m;
    m.data_ = std::move(data);
    m.kind_ = kind;
    m.check_columns();
    m.coherence_ = known_coherence;
    return m;
  }

  const CMat& data() const noexcept { return data_; }
  Index rows() const noexcept { return data_.rows(); }
  Index cols() const noexcept { return data_.cols(); }
  MatrixKind kind() const noexcept { return kind_; }
  double coherence() const noexcept { return coherence_; }

  auto col(Index j) const { return data_.col(j); }

 private:
  SensingMatrix() = default;

  void check_columns() const {
    detail::require(data_.rows() >= 1 && data_.cols() >= 1, ErrorKind::invalid_input, "empty sensing matrix");
    for (Index j = 0; j < data_.cols(); ++j) {
      const double n = data_.col(j).norm();
      if (std::abs(n - 1.0) > kUnitNormTol)
        throw Error(ErrorKind::invalid_input, "column " + std::to_string(j) + " has norm " + std::to_string(n));
    }
  }

  CMat data_;
  MatrixKind kind_ = MatrixKind::custom;
  double coherence_ = 0.0;
};

}  // namespace sparsecd
