#pragma once

#include "sparsecd/sensing_matrix.hpp"
#include "sparsecd/types.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <span>
#include <string>
#include <vector>

namespace sparsecd {

struct SupportEstimate {
  /// Sorted ascending.
  std::vector<Index> indices;
  double residual_norm = 0.0;
  /// Selection order and residual norm after each iteration (entry 0 is ||y||).
  std::vector<Index> selection_order;
  std::vector<double> residual_history;
};

/// Reusable OMP workspace; the orthonormal basis of the selected columns is
/// extended by modified Gram-Schmidt (with one re-orthogonalization pass).
class OmpSolver {
 public:
  static constexpr double kRankTol = 1e-10;

  SupportEstimate solve(const CMat& A, const CVec& y, Index k) {
    const Index M = A.rows();
    const Index N = A.cols();
    detail::require(y.size() == M, ErrorKind::invalid_input, "observation length differs from matrix rows");
    detail::require(k >= 1 && k <= M && k <= N, ErrorKind::invalid_input,
                    "OMP target size " + std::to_string(k) + " outside [1, min(M, N)]");
    Q_.resize(M, k);
    r_ = y;
    used_.assign(static_cast<std::size_t>(N), 0);
    SupportEstimate out;
    out.residual_history.push_back(r_.norm());
    for (Index it = 0; it < k; ++it) {
      corr_.noalias() = A.adjoint() * r_;
      Index best = -1;
      double best_val = -1.0;
      for (Index j = 0; j < N; ++j) {
        if (used_[static_cast<std::size_t>(j)]) continue;
        const double v = std::norm(corr_(j));
        if (v > best_val) {
          best_val = v;
          best = j;
        }
      }
      used_[static_cast<std::size_t>(best)] = 1;
      CVec q = A.col(best);
      const double col_norm = q.norm();
      for (int pass = 0; pass < 2; ++pass)
        for (Index p = 0; p < it; ++p) q -= Q_.col(p) * Q_.col(p).dot(q);
      const double qn = q.norm();
      if (!(qn > kRankTol * std::max(col_norm, 1.0)))
        throw Error(ErrorKind::numeric, "OMP selected a column inside the span of earlier picks (rank deficient)");
      Q_.col(it) = q / qn;
      r_ -= Q_.col(it) * Q_.col(it).dot(r_);
      out.selection_order.push_back(best);
      out.residual_history.push_back(r_.norm());
    }
    out.indices = out.selection_order;
    std::sort(out.indices.begin(), out.indices.end());
    out.residual_norm = out.residual_history.back();
    return out;
  }

  /// ||y||^2 - ||r||^2 from the last solve, i.e. the energy of y in the selected span.
  double projected_energy(const CVec& y) const { return y.squaredNorm() - r_.squaredNorm(); }

 private:
  CMat Q_;
  CVec r_;
  CVec corr_;
  std::vector<char> used_;
};

inline SupportEstimate omp(const CMat& A, const CVec& y, Index k) {
  OmpSolver solver;
  return solver.solve(A, y, k);
}

inline SupportEstimate omp(const SensingMatrix& A, const CVec& y, Index k) { return omp(A.data(), y, k); }

inline double support_recovery_pct(std::span<const Index> estimate, std::span<const Index> truth) {
  detail::require(!truth.empty(), ErrorKind::invalid_input, "true support is empty");
  std::vector<Index> a(estimate.begin(), estimate.end());
  std::vector<Index> b(truth.begin(), truth.end());
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  std::sort(b.begin(), b.end());
  std::vector<Index> common;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
  return 100.0 * static_cast<double>(common.size()) / static_cast<double>(b.size());
}

inline double support_recovery_pct(const SupportEstimate& estimate, std::span<const Index> truth) {
  return support_recovery_pct(std::span<const Index>(estimate.indices), truth);
}

}  // namespace sparsecd
