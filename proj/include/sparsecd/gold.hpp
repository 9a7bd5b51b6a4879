#pragma once

#include "sparsecd/types.hpp"

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace sparsecd {

/// Feedback taps of a primitive polynomial x^n + ... + 1, listed as the
/// exponents of its non-leading terms other than the constant, plus n.
/// E.g. x^5 + x^2 + 1 is {5, 2}.
struct PreferredPair {
  int n = 0;
  std::vector<int> taps1;
  std::vector<int> taps2;
};

/// Standard preferred pairs (octal 45/75, 103/147, 211/217).
inline PreferredPair preferred_pair(int n) {
  switch (n) {
    case 5: return {5, {5, 2}, {5, 4, 3, 2}};
    case 6: return {6, {6, 1}, {6, 5, 2, 1}};
    case 7: return {7, {7, 3}, {7, 3, 2, 1}};
    default: throw Error(ErrorKind::unsupported, "no built-in preferred pair for n=" + std::to_string(n));
  }
}

/// One period of the m-sequence of a Fibonacci LFSR started from all ones.
inline std::vector<std::uint8_t> m_sequence(int n, std::span<const int> taps) {
  detail::require(n >= 2 && n < 31, ErrorKind::invalid_input, "LFSR degree out of range");
  std::vector<std::uint8_t> state(static_cast<std::size_t>(n), 1);
  const std::size_t length = (std::size_t{1} << n) - 1;
  std::vector<std::uint8_t> out;
  out.reserve(length);
  for (std::size_t i = 0; i < length; ++i) {
    out.push_back(state.back());
    std::uint8_t fb = 0;
    for (int t : taps) fb ^= state[static_cast<std::size_t>(t - 1)];
    for (std::size_t k = state.size() - 1; k > 0; --k) state[k] = state[k - 1];
    state[0] = fb;
  }
  return out;
}

/// Gold correlation bound r(n), normalized by the sequence length.
inline double gold_bound(int n) {
  const double M = std::ldexp(1.0, n) - 1.0;
  const double num = (n % 2 == 1) ? std::ldexp(1.0, (n + 1) / 2) + 1.0 : std::ldexp(1.0, (n + 2) / 2) + 1.0;
  return num / M;
}

struct GoldFamily {
  int n = 0;
  Index length = 0;
  /// Bipolar ±1/√M sequences, unit norm: u, v, then u ⊕ shift(v, k) for k = 0..M-1.
  std::vector<RVec> sequences;
  double bound = 0.0;
  /// Largest normalized cyclic correlation magnitude over all pairs, all
  /// shifts (autocorrelation at non-zero shifts included).
  double max_cross_correlation = 0.0;
};

/// Exhaustive cyclic correlation check over ±1 integer sequences.
inline int max_cyclic_correlation(const std::vector<std::vector<int>>& seqs) {
  int worst = 0;
  const std::size_t L = seqs.front().size();
  for (std::size_t i = 0; i < seqs.size(); ++i)
    for (std::size_t k = i; k < seqs.size(); ++k)
      for (std::size_t s = (i == k ? 1 : 0); s < L; ++s) {
        int acc = 0;
        for (std::size_t m = 0; m < L; ++m) acc += seqs[i][m] * seqs[k][(m + s) % L];
        worst = std::max(worst, std::abs(acc));
      }
  return worst;
}

inline GoldFamily gold_family(const PreferredPair& pair) {
  const int n = pair.n;
  const auto u = m_sequence(n, pair.taps1);
  const auto v = m_sequence(n, pair.taps2);
  const std::size_t L = u.size();

  std::vector<std::vector<int>> bipolar;
  auto push = [&](auto bit_at) {
    std::vector<int> s(L);
    for (std::size_t m = 0; m < L; ++m) s[m] = 1 - 2 * static_cast<int>(bit_at(m));
    bipolar.push_back(std::move(s));
  };
  push([&](std::size_t m) { return u[m]; });
  push([&](std::size_t m) { return v[m]; });
  for (std::size_t k = 0; k < L; ++k) push([&](std::size_t m) { return u[m] ^ v[(m + k) % L]; });

  GoldFamily fam;
  fam.n = n;
  fam.length = static_cast<Index>(L);
  fam.bound = gold_bound(n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(L));
  for (const auto& s : bipolar) {
    RVec r(static_cast<Index>(L));
    for (std::size_t m = 0; m < L; ++m) r(static_cast<Index>(m)) = s[m] * scale;
    fam.sequences.push_back(std::move(r));
  }
  fam.max_cross_correlation = static_cast<double>(max_cyclic_correlation(bipolar)) / static_cast<double>(L);
  if (fam.max_cross_correlation > fam.bound + 1e-12)
    throw Error(ErrorKind::numeric, "Gold family violates its correlation bound; taps are not a preferred pair");
  return fam;
}

inline GoldFamily gold_family(int n) { return gold_family(preferred_pair(n)); }

/// Gold codes usable with zero-padded delays up to Delta: each sequence at
/// cyclic shifts 0, Δ+1, 2(Δ+1), ... (floor(M/(Δ+1)) per sequence), sequence major.
inline CMat gold_codes_for_offsets(const GoldFamily& fam, Index Delta) {
  const Index L = fam.length;
  detail::require(Delta >= 0 && Delta + 1 <= L, ErrorKind::invalid_input, "need Delta + 1 <= code length");
  const Index per_code = L / (Delta + 1);
  CMat codes(L, static_cast<Index>(fam.sequences.size()) * per_code);
  Index col = 0;
  for (const RVec& s : fam.sequences)
    for (Index m = 0; m < per_code; ++m) {
      const Index shift = m * (Delta + 1);
      for (Index i = 0; i < L; ++i) codes(i, col) = s((i + shift) % L);
      ++col;
    }
  return codes;
}

}  // namespace sparsecd
