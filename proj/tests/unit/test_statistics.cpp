#include "sparsecd/bases.hpp"
#include "sparsecd/model.hpp"
#include "sparsecd/random_matrices.hpp"
#include "sparsecd/statistics.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace sparsecd;

namespace {

// Composite Simpson on [a, b].
template <class F>
double simpson(F f, double a, double b, int n = 20000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace

TEST(Scalar, Log1mexpAccuracy) {
  for (double x : {1e-12, 1e-6, 0.1, 0.5, 0.7, 1.0, 5.0, 40.0}) {
    const long double ref = std::log(-std::expm1(-static_cast<long double>(x)));
    EXPECT_NEAR(log1mexp(x), static_cast<double>(ref), 1e-12 * std::max(1.0, std::abs(static_cast<double>(ref))));
  }
  EXPECT_TRUE(std::isfinite(log1mexp(800.0)));
}

TEST(Scalar, ComplexNormalLlr) {
  const double u = 1.7;
  EXPECT_NEAR(cn_llr(u, 1.0, 3.0), cn_log_pdf(u, 3.0) - cn_log_pdf(u, 1.0), 1e-14);
  EXPECT_NEAR(cn_llr(u, 1.0, 3.0), std::log(1.0 / 3.0) + u * (1.0 - 1.0 / 3.0), 1e-14);
  // CN(0, v) density integrates to one over the plane: int pi e^{-r^2/v}/(pi v) d(r^2) = 1.
  EXPECT_NEAR(simpson([](double s) { return std::numbers::pi * std::exp(cn_log_pdf(s, 2.0)); }, 0.0, 80.0), 1.0,
              1e-8);
}

TEST(Scalar, NormalLlr) {
  const Normal f0{0.0, 1.0}, f1{1.0, 4.0};
  const double x = 0.3;
  const double ref = (-0.5 * std::log(2 * std::numbers::pi * 4.0) - (x - 1.0) * (x - 1.0) / 8.0) -
                     (-0.5 * std::log(2 * std::numbers::pi) - x * x / 2.0);
  EXPECT_NEAR(normal_llr(x, f0, f1), ref, 1e-14);
}

TEST(GaussianVector, LogPdfAndQuadraticFormAgree) {
  Rng rng(12);
  const SensingMatrix A = random_matrix(RandomKind::gaussian, 5, 12, rng);
  const std::vector<Index> S{2, 7};
  const RVec v = (RVec(2) << 1.5, 0.7).finished();
  const GaussianVecModel f0(CMat::Identity(5, 5) * 0.8);
  const GaussianVecModel f1(post_change_covariance(A, S, v, 0.8));
  const QuadraticLlr q(f0, f1);
  for (int r = 0; r < 10; ++r) {
    CVec y(5);
    for (Index i = 0; i < 5; ++i) y(i) = rng.complex_normal(1.0);
    EXPECT_NEAR(q(y), llr_gaussian_vec(y, f0, f1), 1e-10);
  }
  // Diagonal oracle.
  const GaussianVecModel d(CMat(RVec((RVec(2) << 2.0, 0.5).finished()).cast<cplx>().asDiagonal()));
  const CVec y = (CVec(2) << cplx(1.0, 1.0), cplx(0.0, -2.0)).finished();
  const double ref = cn_log_pdf(2.0, 2.0) + cn_log_pdf(4.0, 0.5);
  EXPECT_NEAR(d.log_pdf(y), ref, 1e-12);
}

TEST(Aggregate, EntryModel) {
  const auto m0 = aggregate_model(0.0, 3, 2.0, 1.0);
  EXPECT_DOUBLE_EQ(m0.var0, 1.0);
  EXPECT_DOUBLE_EQ(m0.var1_out, 1.0);
  EXPECT_DOUBLE_EQ(m0.var1_in, 3.0);
  const double a = 0.3;
  const auto m = aggregate_model(a, 3, 2.0, 1.0);
  EXPECT_NEAR(m.var1_out, 1.0 + 3 * a * a * 2.0, 1e-14);
  EXPECT_NEAR(m.var1_in, 1.0 + 3 * a * a * 2.0 + (1 - a * a) * 2.0, 1e-14);
  EXPECT_NEAR(m.llr(1.3), m.slope() * 1.3 + m.intercept(), 1e-14);
}

TEST(Energy, KnownVarianceUnitaryMatchesExactMoments) {
  const auto e = energy_model(0.0, 3, 2.0, 0.5, 8, VarianceKnowledge::known);
  const auto [mean, var] = energy_moments(RVec::Constant(3, 2.0), 0.5, 8);
  EXPECT_NEAR(e.mu1, mean, 1e-12);
  EXPECT_NEAR(e.var1, var, 1e-12);
  EXPECT_NEAR(e.mu0, 4.0, 1e-12);
  EXPECT_NEAR(e.var0, 2.0, 1e-12);
}

TEST(Energy, BoundsUsePhiMin) {
  const double alpha = 0.2;
  const auto e = energy_model(alpha, 3, 1.0, 1.0, 10, VarianceKnowledge::bounds);
  EXPECT_NEAR(e.phi_min, 1.0 - 2 * alpha, 1e-14);
  EXPECT_NEAR(e.mu1, 3 * e.phi_min + 10.0, 1e-14);
  EXPECT_DOUBLE_EQ(gershgorin_phi_min(1.0, 0.9, 3), 0.0);
}

TEST(Energy, ThetaFamilies) {
  const auto k = energy_model_theta(0.6, 10, 1.0, 3, 0.5);
  EXPECT_NEAR(k.mu1, 1.8 + 10.0, 1e-14);
  EXPECT_NEAR(k.var1, 3 * 0.36 + 2 * 3 * 0.6 + 10.0, 1e-14);
  const auto u = energy_model_theta(1.8, 10, 1.0, std::nullopt, 0.5);
  EXPECT_NEAR(u.mu1, 1.8 + 10.0, 1e-14);
  EXPECT_NEAR(u.var1, 0.5 * 1.8 + 2 * 1.8 + 10.0, 1e-14);
  const auto zero = energy_model_theta(0.0, 10, 1.0, 3, 0.5);
  EXPECT_NEAR(zero.llr(12.3), 0.0, 1e-14);
}

TEST(Gershgorin, IntervalsContainEigenvalues) {
  Rng rng(77);
  const SensingMatrix A = mub_select_columns(mub(7), 20);
  for (int r = 0; r < 20; ++r) {
    const auto S = random_support(20, 4, rng);
    RVec v(4);
    for (Index i = 0; i < 4; ++i) v(i) = rng.uniform(0.5, 2.0);
    CMat AS(7, 4);
    for (Index i = 0; i < 4; ++i) AS.col(i) = A.col(S[static_cast<std::size_t>(i)]);
    const RVec sq = v.cwiseSqrt();
    const CMat B = sq.asDiagonal() * (AS.adjoint() * AS) * sq.asDiagonal();
    const RVec eig = Eigen::SelfAdjointEigenSolver<CMat>(B).eigenvalues();
    const auto iv = gershgorin_bounds(v, A.coherence());
    for (Index k = 0; k < eig.size(); ++k) {
      bool inside = false;
      for (const auto& I : iv) inside = inside || I.contains(eig(k), 1e-12);
      EXPECT_TRUE(inside) << eig(k);
    }
  }
}

TEST(Correlator, DensitiesIntegrateToOne) {
  const auto m = correlator_model(0.25, 3, 40, 1.5, 1.0);
  const double i0 = simpson([&](double c) { return std::exp(m.log_f0(c)); }, 0.0, 60.0, 200000);
  const double i1 = simpson([&](double c) { return std::exp(m.log_f1(c)); }, 0.0, 60.0, 200000);
  EXPECT_NEAR(i0, 1.0, 1e-6);
  EXPECT_NEAR(i1, 1.0, 1e-6);
}

TEST(Correlator, NullDensityIsDerivativeOfCdf) {
  const auto m = correlator_model(0.25, 3, 40, 1.5, 2.0);
  const double c = 7.0, h = 1e-5;
  auto F = [&](double x) { return std::pow(1.0 - std::exp(-x / 2.0), 40.0); };
  EXPECT_NEAR(std::exp(m.log_f0(c)), (F(c + h) - F(c - h)) / (2 * h), 1e-7);
}

TEST(Correlator, EdgeCases) {
  const auto m = correlator_model(0.0, 2, 2, 1.0, 1.0);
  EXPECT_TRUE(std::isfinite(m.llr(0.0)));
  EXPECT_TRUE(std::isfinite(m.llr(1e-300)));
  EXPECT_THROW(m.llr(-1.0), Error);
}

TEST(Pse, NullMeanAndNoncentrality) {
  const SensingMatrix A = unitary_dft(8);
  Rng rng(2);
  const std::vector<Index> S{1, 4};
  double sum = 0.0;
  const int n = 40000;
  for (int r = 0; r < n; ++r) {
    CVec y(8);
    for (Index i = 0; i < 8; ++i) y(i) = rng.complex_normal(2.0);
    sum += pse_statistic(A.data(), y, S, 2.0);
  }
  EXPECT_NEAR(sum / n, 2.0, 0.03);
  const auto p = pse_model(8, 8, 2, 2, 2 * 3.0, 1.0);
  EXPECT_NEAR(p.noncentrality, 6.0, 1e-12);
  EXPECT_DOUBLE_EQ(p.f0().mean, 2.0);
  EXPECT_THROW(pse_model(8, 8, 2, 3, 1.0, 1.0), Error);
}

TEST(Pse, RowOrthonormalize) {
  Rng rng(6);
  const SensingMatrix D = random_matrix(RandomKind::dft_rows, 8, 32, rng);
  const auto [B, c] = row_orthonormalize(D);
  EXPECT_NEAR(c, 4.0, 1e-10);
  EXPECT_LT((B * B.adjoint() - CMat::Identity(8, 8)).cwiseAbs().maxCoeff(), 1e-10);
  const SensingMatrix G = random_matrix(RandomKind::gaussian, 8, 32, rng);
  try {
    row_orthonormalize(G);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::unsupported);
  }
}
