#pragma once

#include "sparsecd/sensing_matrix.hpp"
#include "sparsecd/types.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace sparsecd {

namespace detail {

template <class Mat>
double lagged_max(const Mat& codes, Index Delta) {
  const Index L = codes.rows();
  double best = 0.0;
  for (Index s = 0; s <= std::min(Delta, L - 1); ++s) {
    // Column (i, δ) against (j, δ + s): sum_m conj(a_i[m + s]) a_j[m].
    const Mat G = codes.bottomRows(L - s).adjoint() * codes.topRows(L - s);
    for (Index j = 0; j < G.cols(); ++j)
      for (Index i = 0; i < G.rows(); ++i)
        if (s > 0 || i != j) best = std::max(best, static_cast<double>(std::abs(G(i, j))));
  }
  return best;
}

}  // namespace detail

/// Coherence of the offset-augmented matrix without forming it: a zero-padded
/// shift by δ only ever meets another shift through the lag δ' - δ, so Δ + 1
/// P x P products cover every column pair.
inline double augmented_coherence(const CMat& codes, Index Delta) {
  detail::require(Delta >= 0, ErrorKind::invalid_input, "Delta must be non-negative");
  if (codes.imag().cwiseAbs().maxCoeff() == 0.0) return detail::lagged_max(RMat(codes.real()), Delta);
  return detail::lagged_max(codes, Delta);
}

/// Columns [0_δ; a_i; 0_{Δ-δ}] for every code i and δ in 0..Δ, code major.
inline SensingMatrix augment_with_offsets(const CMat& codes, Index Delta,
                                          MatrixKind kind = MatrixKind::gold_augmented) {
  detail::require(Delta >= 0, ErrorKind::invalid_input, "Delta must be non-negative");
  const Index L = codes.rows();
  const Index P = codes.cols();
  CMat out = CMat::Zero(L + Delta, P * (Delta + 1));
  for (Index i = 0; i < P; ++i) {
    const double n = codes.col(i).norm();
    detail::require(std::abs(n - 1.0) <= SensingMatrix::kUnitNormTol, ErrorKind::invalid_input,
                    "codes must have unit norm");
    for (Index d = 0; d <= Delta; ++d) out.col(i * (Delta + 1) + d).segment(d, L) = codes.col(i);
  }
  const double alpha = out.cols() >= 2 ? augmented_coherence(codes, Delta) : 0.0;
  return SensingMatrix::with_coherence(std::move(out), kind, alpha);
}

/// Code index and offset of an augmented column.
inline std::pair<Index, Index> augmented_code_offset(Index column, Index Delta) {
  return {column / (Delta + 1), column % (Delta + 1)};
}

}  // namespace sparsecd
