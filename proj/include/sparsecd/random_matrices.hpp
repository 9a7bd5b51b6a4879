#pragma once

#include "sparsecd/model.hpp"
#include "sparsecd/rng.hpp"
#include "sparsecd/sensing_matrix.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace sparsecd {

/// Normalized M-point DFT matrix; unitary.
inline CMat dft_matrix(Index n) {
  CMat F(n, n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (Index r = 0; r < n; ++r)
    for (Index c = 0; c < n; ++c)
      F(r, c) = std::polar(scale, -2.0 * std::numbers::pi * static_cast<double>((r * c) % n) / static_cast<double>(n));
  return F;
}

inline SensingMatrix unitary_dft(Index M) { return SensingMatrix::normalized(dft_matrix(M), MatrixKind::unitary); }

/// Haar-like random unitary from the QR factorization of a Gaussian matrix.
inline SensingMatrix random_unitary(Index M, Rng& rng) {
  CMat G(M, M);
  for (Index j = 0; j < M; ++j)
    for (Index i = 0; i < M; ++i) G(i, j) = rng.complex_normal(1.0);
  Eigen::HouseholderQR<CMat> qr(G);
  CMat Q = qr.householderQ() * CMat::Identity(M, M);
  const CMat R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < M; ++j) {
    const cplx d = R(j, j);
    Q.col(j) *= (std::abs(d) > 0.0 ? d / std::abs(d) : cplx(1.0));
  }
  return SensingMatrix::normalized(std::move(Q), MatrixKind::unitary);
}

enum class RandomKind { gaussian, bernoulli, dft_rows };

/// Random ensembles, column-normalized. dft_rows draws M distinct rows of the
/// N-point DFT without replacement (in the order drawn).
inline SensingMatrix random_matrix(RandomKind kind, Index M, Index N, Rng& rng) {
  detail::require(M >= 1 && N >= 1, ErrorKind::invalid_input, "matrix dimensions must be positive");
  CMat A(M, N);
  switch (kind) {
    case RandomKind::gaussian:
      for (Index j = 0; j < N; ++j)
        for (Index i = 0; i < M; ++i) A(i, j) = rng.complex_normal(1.0);
      return SensingMatrix::normalized(std::move(A), MatrixKind::gaussian);
    case RandomKind::bernoulli: {
      const double v = 1.0 / std::sqrt(static_cast<double>(M));
      for (Index j = 0; j < N; ++j)
        for (Index i = 0; i < M; ++i) A(i, j) = (rng.uniform() < 0.5) ? v : -v;
      return SensingMatrix::normalized(std::move(A), MatrixKind::bernoulli);
    }
    case RandomKind::dft_rows: {
      if (M > N)
        throw Error(ErrorKind::invalid_input,
                    "dft_rows needs M <= N (M=" + std::to_string(M) + ", N=" + std::to_string(N) + ")");
      std::vector<Index> rows(static_cast<std::size_t>(N));
      std::iota(rows.begin(), rows.end(), Index{0});
      for (Index i = 0; i < M; ++i) std::swap(rows[static_cast<std::size_t>(i)], rows[static_cast<std::size_t>(i + rng.index(N - i))]);
      for (Index i = 0; i < M; ++i) {
        const Index r = rows[static_cast<std::size_t>(i)];
        for (Index c = 0; c < N; ++c)
          A(i, c) = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>((r * c) % N) / static_cast<double>(N));
      }
      return SensingMatrix::normalized(std::move(A), MatrixKind::dft_rows);
    }
  }
  throw Error(ErrorKind::invalid_input, "unknown random matrix kind");
}

}  // namespace sparsecd
