#pragma once

#include "sparsecd/fiducials_data.hpp"
#include "sparsecd/rng.hpp"
#include "sparsecd/sensing_matrix.hpp"
#include "sparsecd/types.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

namespace sparsecd {

enum class FiducialSource { analytic, numeric_search, file_import };

/// Seed vector of a Weyl–Heisenberg covariant SIC-POVM.
struct Fiducial {
  Index d = 0;
  CVec vector;
  FiducialSource source = FiducialSource::numeric_search;
  /// max | |<a_i,a_l>|^2 - 1/(d+1) | over all pairs of the generated set.
  double residual = std::numeric_limits<double>::infinity();
};

namespace wh {

/// X^a Z^b v with X the cyclic shift (e_i -> e_{i+1}) and Z = diag(ω^i).
inline CVec shift_clock(const CVec& v, Index a, Index b) {
  const Index d = v.size();
  CVec out(d);
  for (Index l = 0; l < d; ++l) {
    const Index src = ((l - a) % d + d) % d;
    const double angle = 2.0 * std::numbers::pi * static_cast<double>((b * src) % d) / static_cast<double>(d);
    out(l) = std::polar(1.0, angle) * v(src);
  }
  return out;
}

/// τ^{ab} with τ = -exp(πj/d).
inline cplx phase(Index a, Index b, Index d) {
  const Index ab = a * b;
  const double angle = std::numbers::pi * static_cast<double>(ab % (2 * d)) / static_cast<double>(d);
  const double sign = (ab % 2 == 0) ? 1.0 : -1.0;
  return sign * std::polar(1.0, angle);
}

/// D_(a,b) v = τ^{ab} X^a Z^b v.
inline CVec displace(const CVec& v, Index a, Index b) { return phase(a, b, v.size()) * shift_clock(v, a, b); }

}  // namespace wh

/// All d² displaced copies of `fiducial`, column a·d + b holding D_(a,b)·fiducial.
inline CMat weyl_heisenberg_orbit(const CVec& fiducial) {
  const Index d = fiducial.size();
  CMat out(d, d * d);
  for (Index a = 0; a < d; ++a)
    for (Index b = 0; b < d; ++b) out.col(a * d + b) = wh::displace(fiducial, a, b);
  return out;
}

/// Exhaustive max over column pairs of | |<v_i,v_l>|^2 - target |.
inline double equiangular_residual(const CMat& vectors, double target) {
  const CMat G = vectors.adjoint() * vectors;
  double worst = 0.0;
  for (Index j = 0; j < G.cols(); ++j)
    for (Index i = 0; i < j; ++i) worst = std::max(worst, std::abs(std::norm(G(i, j)) - target));
  return worst;
}

inline double fiducial_residual(const CVec& v) {
  const Index d = v.size();
  return equiangular_residual(weyl_heisenberg_orbit(v.normalized()), 1.0 / static_cast<double>(d + 1));
}

namespace detail {

/// Residuals |<ψ, X^a Z^b ψ>|²/‖ψ‖⁴ - 1/(d+1) for (a,b) ≠ (0,0) and their
/// Jacobian with respect to (Re ψ, Im ψ).
inline void fiducial_residuals(const CVec& psi, RVec& r, RMat* J) {
  const Index d = psi.size();
  const double target = 1.0 / static_cast<double>(d + 1);
  const double n = psi.squaredNorm();
  const Index rows = d * d - 1;
  r.resize(rows);
  if (J) J->resize(rows, 2 * d);

  std::vector<cplx> omega(static_cast<std::size_t>(d));
  for (Index k = 0; k < d; ++k)
    omega[static_cast<std::size_t>(k)] = std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(d));

  Index row = 0;
  for (Index a = 0; a < d; ++a) {
    for (Index b = 0; b < d; ++b) {
      if (a == 0 && b == 0) continue;
      // w = X^a Z^b ψ: w_l = ω^{b(l-a)} ψ_{l-a}
      cplx u = 0.0;
      CVec w(d), v(d);
      for (Index l = 0; l < d; ++l) {
        const Index src = (l - a + d) % d;
        w(l) = omega[static_cast<std::size_t>((b * src) % d)] * psi(src);
        u += std::conj(psi(l)) * w(l);
      }
      const double mag = std::norm(u);
      r(row) = mag / (n * n) - target;
      if (J) {
        // (D^T conj ψ)_k = ω^{bk} conj(ψ_{k+a})
        for (Index k = 0; k < d; ++k) v(k) = omega[static_cast<std::size_t>((b * k) % d)] * std::conj(psi((k + a) % d));
        for (Index k = 0; k < d; ++k) {
          const cplx du_dx = w(k) + v(k);
          const cplx du_dy = cplx(0.0, -1.0) * w(k) + cplx(0.0, 1.0) * v(k);
          const double dmag_dx = 2.0 * std::real(std::conj(u) * du_dx);
          const double dmag_dy = 2.0 * std::real(std::conj(u) * du_dy);
          (*J)(row, k) = dmag_dx / (n * n) - 4.0 * mag * psi(k).real() / (n * n * n);
          (*J)(row, d + k) = dmag_dy / (n * n) - 4.0 * mag * psi(k).imag() / (n * n * n);
        }
      }
      ++row;
    }
  }
}

/// Levenberg–Marquardt descent on the equiangularity residuals from `psi`.
inline CVec polish_fiducial(CVec psi, int max_iterations, double tol) {
  const Index d = psi.size();
  psi.normalize();
  RVec r, r_try;
  RMat J;
  fiducial_residuals(psi, r, &J);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  for (int it = 0; it < max_iterations; ++it) {
    if (r.cwiseAbs().maxCoeff() <= tol) break;
    const RMat JtJ = J.transpose() * J;
    const RVec g = J.transpose() * r;
    bool accepted = false;
    for (int attempt = 0; attempt < 12 && !accepted; ++attempt) {
      RMat H = JtJ;
      H.diagonal() += lambda * (JtJ.diagonal().array() + 1e-12).matrix();
      const RVec step = H.ldlt().solve(-g);
      CVec trial(d);
      for (Index k = 0; k < d; ++k) trial(k) = psi(k) + cplx(step(k), step(d + k));
      trial.normalize();
      fiducial_residuals(trial, r_try, nullptr);
      const double c = r_try.squaredNorm();
      if (c < cost) {
        psi = trial;
        cost = c;
        lambda = std::max(lambda / 3.0, 1e-15);
        accepted = true;
      } else {
        lambda *= 4.0;
      }
    }
    if (!accepted) break;
    fiducial_residuals(psi, r, &J);
  }
  return psi;
}

}  // namespace detail

/// Randomized search for a Weyl–Heisenberg SIC fiducial in dimension d:
/// Levenberg–Marquardt on the deviations of |<ψ, D ψ>|² from 1/(d+1),
/// restarted from random vectors until the exhaustive residual is ≤ tol.
inline Fiducial find_fiducial(Index d, Rng& rng, double tol = 1e-10, int max_restarts = 200) {
  ::sparsecd::detail::require(d >= 2, ErrorKind::invalid_input, "fiducial search needs d >= 2");
  Fiducial best;
  best.d = d;
  for (int attempt = 0; attempt < max_restarts; ++attempt) {
    CVec psi(d);
    for (Index k = 0; k < d; ++k) psi(k) = rng.complex_normal(1.0);
    psi = detail::polish_fiducial(psi, 400, tol * 1e-2);
    const double res = fiducial_residual(psi);
    if (res < best.residual) {
      best.vector = psi;
      best.residual = res;
    }
    if (res <= tol) {
      best.source = FiducialSource::numeric_search;
      return best;
    }
  }
  throw SearchFailure("no SIC fiducial found in dimension " + std::to_string(d), best.residual);
}

inline bool has_bundled_fiducial(Index d) { return data::bundled_fiducial_components(d) != nullptr; }

inline Fiducial bundled_fiducial(Index d) {
  const double* raw = data::bundled_fiducial_components(d);
  if (!raw) throw Error(ErrorKind::unsupported, "no bundled fiducial for d=" + std::to_string(d));
  Fiducial f;
  f.d = d;
  f.vector.resize(d);
  for (Index k = 0; k < d; ++k) f.vector(k) = cplx(raw[2 * k], raw[2 * k + 1]);
  f.vector.normalize();
  f.source = FiducialSource::numeric_search;
  f.residual = fiducial_residual(f.vector);
  return f;
}

/// Reads one complex component per line as "re im"; blank lines and lines
/// starting with '#' are skipped.
inline Fiducial read_fiducial(std::istream& in) {
  std::vector<cplx> comps;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    double re = 0.0, im = 0.0;
    if (!(ls >> re >> im)) throw Error(ErrorKind::config, "bad fiducial line: '" + line + "'");
    comps.emplace_back(re, im);
  }
  ::sparsecd::detail::require(comps.size() >= 2, ErrorKind::config, "fiducial file needs at least 2 components");
  Fiducial f;
  f.d = static_cast<Index>(comps.size());
  f.vector = Eigen::Map<const CVec>(comps.data(), f.d);
  ::sparsecd::detail::require(f.vector.norm() > 0.0, ErrorKind::config, "fiducial is the zero vector");
  f.vector.normalize();
  f.source = FiducialSource::file_import;
  f.residual = fiducial_residual(f.vector);
  return f;
}

inline Fiducial load_fiducial(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::config, "cannot open fiducial file " + path);
  return read_fiducial(in);
}

/// First N vectors (lexicographic (a,b)) of the SIC-POVM generated by `fiducial`.
inline SensingMatrix sic_povm(const Fiducial& fiducial, Index N) {
  const Index d = fiducial.d;
  ::sparsecd::detail::require(N >= 1 && N <= d * d, ErrorKind::invalid_input,
                              "SIC-POVM has only d^2 = " + std::to_string(d * d) + " vectors");
  CMat orbit = weyl_heisenberg_orbit(fiducial.vector.normalized());
  return SensingMatrix::normalized(orbit.leftCols(N), MatrixKind::sic_povm);
}

/// SIC vectors usable as codes when every code also appears with zero-padded
/// delays up to Delta: for each clock index b, shifts a ∈ {0, Δ+1, 2(Δ+1), ...}.
/// Returns d · floor(d/(Δ+1)) columns, base-code major.
inline CMat sic_codes_for_offsets(const Fiducial& fiducial, Index Delta) {
  const Index d = fiducial.d;
  ::sparsecd::detail::require(Delta >= 0 && Delta + 1 <= d, ErrorKind::invalid_input, "need Delta + 1 <= d");
  const Index per_code = d / (Delta + 1);
  CMat codes(d, d * per_code);
  const CVec psi = fiducial.vector.normalized();
  Index col = 0;
  for (Index b = 0; b < d; ++b)
    for (Index m = 0; m < per_code; ++m) codes.col(col++) = wh::displace(psi, m * (Delta + 1), b);
  return codes;
}

}  // namespace sparsecd
