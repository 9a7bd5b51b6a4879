#pragma once

#include "sparsecd/types.hpp"

#include <Eigen/QR>

namespace sparsecd {

inline constexpr double kRankTol = 1e-10;

/// Orthonormal basis Q of span(B) via column-pivoted QR; throws when B is
/// numerically rank deficient.
inline CMat orthonormal_span(const CMat& B, double rank_tol = kRankTol) {
  Eigen::ColPivHouseholderQR<CMat> qr(B);
  qr.setThreshold(rank_tol);
  if (qr.rank() < B.cols()) throw Error(ErrorKind::numeric, "matrix is numerically rank deficient");
  return CMat(qr.householderQ()).leftCols(B.cols());
}

/// I - B (B* B)^{-1} B*, the projector onto the orthogonal complement of span(B).
inline CMat orthogonal_complement_projection(const CMat& B, Index M) {
  CMat P = CMat::Identity(M, M);
  if (B.cols() == 0) return P;
  detail::require(B.rows() == M, ErrorKind::invalid_input, "code matrix has the wrong number of rows");
  detail::require(B.cols() <= M, ErrorKind::numeric, "more codes than dimensions; projection would be zero-rank");
  const CMat Q = orthonormal_span(B);
  P.noalias() -= Q * Q.adjoint();
  return P;
}

inline CMat orthogonal_complement_projection(const CMat& B) { return orthogonal_complement_projection(B, B.rows()); }

}  // namespace sparsecd
