#include "sparsecd/bases.hpp"
#include "sparsecd/projection.hpp"
#include "sparsecd/random_matrices.hpp"
#include "sparsecd/recovery.hpp"

#include <gtest/gtest.h>

using namespace sparsecd;

namespace {

// Residual after projecting y onto span(A_S).
double residual(const CMat& A, const CVec& y, const std::vector<Index>& S) {
  CMat AS(A.rows(), static_cast<Index>(S.size()));
  for (std::size_t k = 0; k < S.size(); ++k) AS.col(static_cast<Index>(k)) = A.col(S[k]);
  return (orthogonal_complement_projection(AS) * y).norm();
}

}  // namespace

TEST(Omp, ExactRecoveryNoiseless) {
  const SensingMatrix A = mub_select_columns(mub(11), 40);
  Rng rng(1);
  for (int r = 0; r < 30; ++r) {
    std::vector<Index> S;
    while (S.size() < 2) {
      const Index i = rng.index(40);
      if (std::find(S.begin(), S.end(), i) == S.end()) S.push_back(i);
    }
    std::sort(S.begin(), S.end());
    CVec y = CVec::Zero(11);
    for (Index k : S) y += A.col(k) * cplx(1.0 + rng.uniform(), rng.uniform());
    const auto est = omp(A, y, 2);
    EXPECT_EQ(est.indices, S);
    EXPECT_LT(est.residual_norm, 1e-10);
  }
}

TEST(Omp, FirstPickIsExhaustiveBestSingleton) {
  Rng rng(2);
  const SensingMatrix A = random_matrix(RandomKind::gaussian, 6, 15, rng);
  for (int r = 0; r < 20; ++r) {
    CVec y(6);
    for (Index i = 0; i < 6; ++i) y(i) = rng.complex_normal(1.0);
    const auto est = omp(A, y, 1);
    Index best = 0;
    double best_res = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < 15; ++j) {
      const double res = residual(A.data(), y, {j});
      if (res < best_res) {
        best_res = res;
        best = j;
      }
    }
    EXPECT_EQ(est.indices, std::vector<Index>{best});
    EXPECT_NEAR(est.residual_norm, best_res, 1e-10);
  }
}

TEST(Omp, ResidualIsOrthogonalAndHistoryDecreases) {
  Rng rng(3);
  const SensingMatrix A = random_matrix(RandomKind::gaussian, 8, 20, rng);
  CVec y(8);
  for (Index i = 0; i < 8; ++i) y(i) = rng.complex_normal(1.0);
  OmpSolver solver;
  const auto est = solver.solve(A.data(), y, 4);
  EXPECT_NEAR(est.residual_norm, residual(A.data(), y, est.indices), 1e-10);
  for (std::size_t i = 1; i < est.residual_history.size(); ++i)
    EXPECT_LE(est.residual_history[i], est.residual_history[i - 1] + 1e-12);
  EXPECT_NEAR(solver.projected_energy(y), y.squaredNorm() - est.residual_norm * est.residual_norm, 1e-10);
  EXPECT_EQ(est.selection_order.size(), 4u);
}

TEST(Omp, RejectsBadSize) {
  const SensingMatrix A = unitary_dft(4);
  const CVec y = CVec::Ones(4);
  EXPECT_THROW(omp(A, y, 0), Error);
  EXPECT_THROW(omp(A, y, 5), Error);
  EXPECT_THROW(omp(A, CVec::Ones(3), 1), Error);
}

TEST(Omp, RankDeficientSelectionThrows) {
  // Both columns are e_0, so the second pick lies in the span of the first.
  CMat A = CMat::Zero(2, 2);
  A(0, 0) = 1.0;
  A(0, 1) = 1.0;
  const CVec y = (CVec(2) << cplx(1.0, 0.0), cplx(0.5, 0.0)).finished();
  try {
    omp(A, y, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::numeric);
  }
}

TEST(Recovery, Percentage) {
  const std::vector<Index> truth{1, 4, 9};
  EXPECT_DOUBLE_EQ(support_recovery_pct(std::vector<Index>{9, 1, 4}, truth), 100.0);
  EXPECT_NEAR(support_recovery_pct(std::vector<Index>{1, 2, 3}, truth), 100.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(support_recovery_pct(std::vector<Index>{}, truth), 0.0);
  EXPECT_THROW(support_recovery_pct(std::vector<Index>{1}, std::vector<Index>{}), Error);
}
