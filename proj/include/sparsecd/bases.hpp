#pragma once

#include "sparsecd/sensing_matrix.hpp"
#include "sparsecd/types.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

namespace sparsecd {

/// d+1 orthonormal d x d bases and their largest cross-basis |<a, b>|.
struct BasisFamily {
  Index d = 0;
  std::vector<CMat> bases;
  double cross_coherence = 0.0;
  /// Prime whose field the phases live in (d itself for MUBs).
  std::int64_t prime = 0;
};

namespace detail {

inline bool is_prime(std::int64_t n) {
  if (n < 2) return false;
  for (std::int64_t k = 2; k * k <= n; ++k)
    if (n % k == 0) return false;
  return true;
}

inline std::int64_t pow_mod(std::int64_t base, std::int64_t exp, std::int64_t mod) {
  std::int64_t result = 1 % mod;
  base %= mod;
  while (exp > 0) {
    if (exp & 1) result = result * base % mod;
    base = base * base % mod;
    exp >>= 1;
  }
  return result;
}

inline std::int64_t primitive_root(std::int64_t p) {
  std::vector<std::int64_t> factors;
  std::int64_t m = p - 1;
  for (std::int64_t f = 2; f * f <= m; ++f) {
    if (m % f == 0) {
      factors.push_back(f);
      while (m % f == 0) m /= f;
    }
  }
  if (m > 1) factors.push_back(m);
  for (std::int64_t g = 2; g < p; ++g) {
    bool ok = true;
    for (std::int64_t f : factors)
      if (pow_mod(g, (p - 1) / f, p) == 1) {
        ok = false;
        break;
      }
    if (ok) return g;
  }
  return 1;  // p = 2
}

inline double max_cross_basis(const std::vector<CMat>& bases) {
  double worst = 0.0;
  for (std::size_t i = 0; i < bases.size(); ++i)
    for (std::size_t j = i + 1; j < bases.size(); ++j)
      worst = std::max(worst, (bases[i].adjoint() * bases[j]).cwiseAbs().maxCoeff());
  return worst;
}

}  // namespace detail

inline bool is_odd_prime(Index d) { return d > 2 && detail::is_prime(d); }

/// Mutually unbiased bases for an odd prime d: the standard basis followed by
/// the quadratic-phase bases U_a[l, b] = ω^{a l² + b l} / √d, a = 0..d-1.
inline BasisFamily mub(Index d) {
  if (!is_odd_prime(d))
    throw Error(ErrorKind::unsupported, "MUB construction needs an odd prime dimension, got " + std::to_string(d));
  BasisFamily fam;
  fam.d = d;
  fam.prime = d;
  fam.bases.push_back(CMat::Identity(d, d));
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (Index a = 0; a < d; ++a) {
    CMat U(d, d);
    for (Index l = 0; l < d; ++l)
      for (Index b = 0; b < d; ++b) {
        const Index e = (a * l % d * l + b * l) % d;
        U(l, b) = std::polar(scale, 2.0 * std::numbers::pi * static_cast<double>(e) / static_cast<double>(d));
      }
    fam.bases.push_back(std::move(U));
  }
  fam.cross_coherence = detail::max_cross_basis(fam.bases);
  return fam;
}

/// Approximately mutually unbiased bases for any d ≥ 2. Uses the smallest
/// prime p ≡ 1 (mod d) and the order-d subgroup H = <g^{(p-1)/d}> of F_p^*:
/// basis a has columns χ_j(h) ψ(a h) / √d over h ∈ H, where ψ(x) = e^{2πi x/p}
/// and χ_j runs over the d characters of H. Each basis is orthonormal by
/// character orthogonality; cross-basis magnitudes are bounded by Gauss sums
/// over H, roughly √p / d. The standard basis is prepended.
inline BasisFamily amub(Index d) {
  detail::require(d >= 2, ErrorKind::invalid_input, "AMUB needs d >= 2");
  constexpr std::int64_t kPrimeSearchLimit = 10'000'000;
  std::int64_t p = d + 1;
  while (!(detail::is_prime(p) && (p - 1) % d == 0)) {
    ++p;
    if (p > kPrimeSearchLimit) throw Error(ErrorKind::unsupported, "AMUB prime search exceeded bound");
  }
  const std::int64_t g = detail::primitive_root(p);
  const std::int64_t h = detail::pow_mod(g, (p - 1) / d, p);
  std::vector<std::int64_t> H(static_cast<std::size_t>(d));
  H[0] = 1;
  for (Index k = 1; k < d; ++k) H[static_cast<std::size_t>(k)] = H[static_cast<std::size_t>(k - 1)] * h % p;

  BasisFamily fam;
  fam.d = d;
  fam.prime = p;
  fam.bases.push_back(CMat::Identity(d, d));
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (Index a = 0; a < d; ++a) {
    CMat V(d, d);
    for (Index k = 0; k < d; ++k) {
      const double add = 2.0 * std::numbers::pi * static_cast<double>(a * H[static_cast<std::size_t>(k)] % p) /
                         static_cast<double>(p);
      for (Index j = 0; j < d; ++j) {
        const double mult = 2.0 * std::numbers::pi * static_cast<double>(j * k % d) / static_cast<double>(d);
        V(k, j) = std::polar(scale, add + mult);
      }
    }
    fam.bases.push_back(std::move(V));
  }
  fam.cross_coherence = detail::max_cross_basis(fam.bases);
  return fam;
}

/// Spreads N columns across the d+1 bases: r = floor(N/(d+1)) from every
/// basis, plus one more from each of the first N - r(d+1) bases. Columns are
/// ordered basis by basis.
inline SensingMatrix select_basis_columns(const BasisFamily& family, Index N, MatrixKind kind) {
  const Index d = family.d;
  const Index nb = static_cast<Index>(family.bases.size());
  detail::require(N >= 1 && N <= d * nb, ErrorKind::invalid_input,
                  "cannot take " + std::to_string(N) + " columns from " + std::to_string(nb) + " bases of size " +
                      std::to_string(d));
  const Index r = N / nb;
  const Index extra = N - r * nb;
  CMat A(d, N);
  Index col = 0;
  for (Index k = 0; k < nb; ++k) {
    const Index take = r + (k < extra ? 1 : 0);
    for (Index c = 0; c < take; ++c) A.col(col++) = family.bases[static_cast<std::size_t>(k)].col(c);
  }
  return SensingMatrix::normalized(std::move(A), kind);
}

inline SensingMatrix mub_select_columns(const BasisFamily& family, Index N) {
  return select_basis_columns(family, N, MatrixKind::mub);
}

inline SensingMatrix amub_select_columns(const BasisFamily& family, Index N) {
  return select_basis_columns(family, N, MatrixKind::amub);
}

}  // namespace sparsecd
