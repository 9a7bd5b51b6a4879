#include "sparsecd/bases.hpp"
#include "sparsecd/detectors.hpp"
#include "sparsecd/model.hpp"
#include "sparsecd/random_matrices.hpp"

#include <gtest/gtest.h>

#include <functional>

using namespace sparsecd;

namespace {

CVec noise(Index M, double var, Rng& rng) {
  CVec y(M);
  for (Index i = 0; i < M; ++i) y(i) = rng.complex_normal(var);
  return y;
}

std::vector<CVec> post_change_path(const SensingMatrix& A, const std::vector<Index>& S, double sx, double sn, int n,
                                   Rng& rng) {
  std::vector<CVec> out;
  for (int t = 0; t < n; ++t) {
    CVec y = noise(A.rows(), sn, rng);
    for (Index k : S) y += A.col(k) * rng.complex_normal(sx);
    out.push_back(y);
  }
  return out;
}

}  // namespace

TEST(Cusum, StepRecursion) {
  EXPECT_DOUBLE_EQ(cusum_step(1.0, 0.5), 1.5);
  EXPECT_DOUBLE_EQ(cusum_step(1.0, -3.0), 0.0);
  EXPECT_DOUBLE_EQ(cusum_step(0.0, 0.0), 0.0);
}

TEST(Cusum, IdealDetectorFollowsScalarRecursion) {
  const SensingMatrix A = unitary_dft(4);
  const std::vector<Index> S{0, 2};
  const GaussianVecModel f0(CMat::Identity(4, 4));
  const GaussianVecModel f1(post_change_covariance(A, S, RVec::Constant(2, 2.0), 1.0));
  IdealDetector det(f0, f1);
  Rng rng(1);
  Frame frame(A.data());
  double W = 0.0;
  for (const CVec& y : post_change_path(A, S, 2.0, 1.0, 50, rng)) {
    frame.reset(y);
    det.step(frame);
    W = std::max(W + llr_gaussian_vec(y, f0, f1), 0.0);
    EXPECT_NEAR(det.metric(), W, 1e-9);
  }
  EXPECT_TRUE(det.fired(W - 1e-9));
  EXPECT_FALSE(det.fired(W + 1e-9));
}

TEST(Optimal, CandidateLlrMatchesFullGaussian) {
  Rng rng(3);
  const SensingMatrix A = random_matrix(RandomKind::gaussian, 5, 7, rng);
  const double sx = 1.7, sn = 0.6;
  OptimalDetector det(A, 2, sx, sn);
  ASSERT_EQ(det.candidate_count(), 21u);
  EXPECT_EQ(det.candidate(0), (std::vector<Index>{0, 1}));
  EXPECT_EQ(det.candidate(20), (std::vector<Index>{5, 6}));
  const GaussianVecModel f0(CMat::Identity(5, 5) * sn);
  const CVec y = noise(5, 2.0, rng);
  const CVec g = A.data().adjoint() * y;
  for (std::size_t s = 0; s < det.candidate_count(); ++s) {
    const GaussianVecModel f1(post_change_covariance(A, det.candidate(s), RVec::Constant(2, sx), sn));
    EXPECT_NEAR(det.candidate_llr(s, g), llr_gaussian_vec(y, f0, f1), 1e-9) << s;
  }
}

TEST(Optimal, CapacityIsEnforced) {
  const SensingMatrix A = mub_select_columns(mub(31), 50);
  try {
    OptimalDetector det(A, 3, 1.0, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::capacity);
  }
}

TEST(Optimal, SupportEstimateFindsActiveColumns) {
  const SensingMatrix A = mub_select_columns(mub(5), 10);
  OptimalDetector det(A, 2, 10.0, 1.0);
  Rng rng(5);
  Frame frame(A.data());
  for (const CVec& y : post_change_path(A, {3, 8}, 10.0, 1.0, 40, rng)) {
    frame.reset(y);
    det.step(frame);
  }
  EXPECT_EQ(det.support_estimate(), (std::vector<Index>{3, 8}));
}

TEST(Aggregate, TracksAndTopKSum) {
  const SensingMatrix A = mub_select_columns(mub(7), 20);
  const auto model = aggregate_model(A.coherence(), 3, 2.0, 1.0);
  AggregateDetector det(model, 3, 20);
  Rng rng(9);
  Frame frame(A.data());
  RVec W = RVec::Zero(20);
  for (const CVec& y : post_change_path(A, {1, 9, 15}, 2.0, 1.0, 30, rng)) {
    frame.reset(y);
    const double m = det.step(frame);
    const CVec g = A.data().adjoint() * y;
    for (Index i = 0; i < 20; ++i) W(i) = std::max(W(i) + model.llr(std::norm(g(i))), 0.0);
    std::vector<double> sorted(W.data(), W.data() + 20);
    std::sort(sorted.rbegin(), sorted.rend());
    EXPECT_NEAR(m, sorted[0] + sorted[1] + sorted[2], 1e-9);
    EXPECT_LT((det.entry_tracks() - W).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Aggregate, TieBreakByIndex) {
  RVec W(5);
  W << 1.0, 2.0, 1.0, 2.0, 1.0;
  EXPECT_EQ(detail::top_k_indices(W, 3), (std::vector<Index>{0, 1, 3}));
  std::vector<double> scratch;
  EXPECT_DOUBLE_EQ(detail::top_k_sum(W, 3, scratch), 5.0);
  EXPECT_DOUBLE_EQ(detail::top_k_sum(W, 9, scratch), 7.0);
}

TEST(Energy, MatchesScalarCusum) {
  const SensingMatrix A = unitary_dft(6);
  const auto model = energy_model(0.0, 2, 1.5, 1.0, 6);
  EnergyDetector det(model);
  Rng rng(4);
  Frame frame(A.data());
  double W = 0.0;
  for (const CVec& y : post_change_path(A, {0, 3}, 1.5, 1.0, 30, rng)) {
    frame.reset(y);
    det.step(frame);
    W = std::max(0.0, W + normal_llr(y.squaredNorm(), model.f0(), model.f1()));
    EXPECT_NEAR(det.metric(), W, 1e-9);
  }
}

TEST(Correlator, MatchesScalarCusum) {
  const SensingMatrix A = mub_select_columns(mub(5), 12);
  const auto model = correlator_model(A.coherence(), 2, 12, 2.0, 1.0);
  CorrelatorDetector det(model);
  Rng rng(4);
  Frame frame(A.data());
  double W = 0.0;
  for (const CVec& y : post_change_path(A, {0, 7}, 2.0, 1.0, 30, rng)) {
    frame.reset(y);
    det.step(frame);
    const double c = (A.data().adjoint() * y).cwiseAbs2().maxCoeff();
    W = std::max(0.0, W + model.log_f1(c) - model.log_f0(c));
    EXPECT_NEAR(det.metric(), W, 1e-9);
  }
}

TEST(Pse, OracleAndOmpAgreeAtHighSnr) {
  const SensingMatrix A = unitary_dft(8);
  const auto model = pse_model(8, 8, 2, 2, 2 * 50.0, 1.0);
  PseDetector omp_det(model, 1.0);
  PseDetector oracle(model, 1.0, {2, 5});
  Rng rng(1);
  Frame frame(A.data());
  for (const CVec& y : post_change_path(A, {2, 5}, 50.0, 1.0, 10, rng)) {
    frame.reset(y);
    omp_det.step(frame);
    oracle.step(frame);
    EXPECT_NEAR(omp_det.last_statistic(), oracle.last_statistic(), 1e-9);
  }
  EXPECT_EQ(omp_det.support_estimate(), (std::vector<Index>{2, 5}));
}

TEST(Sgd, UpdateRuleAndClamp) {
  auto L = [](double th) { return -(th - 2.0) * (th - 2.0); };
  // Central difference of L at theta = 1 is 2, so theta + a * 2 * (2c) / c.
  EXPECT_NEAR(sgd_update(1.0, L, 0.1, 0.05), 1.0 + 0.1 * (L(1.05) - L(0.95)) / 0.05, 1e-14);
  // Lower evaluation point clamps at zero.
  EXPECT_NEAR(sgd_update(0.01, L, 0.1, 0.05), 0.01 + 0.1 * (L(0.06) - L(0.0)) / 0.05, 1e-14);
  // Result clamps at zero.
  auto down = [](double th) { return -10.0 * th; };
  EXPECT_DOUBLE_EQ(sgd_update(0.0, down, 1.0, 0.05), 0.0);
  EXPECT_LT(sgd_update(0.0, down, 1.0, 0.05, false), 0.0);
}

TEST(Sgd, AggregateThetaGrowsOnActiveEntries) {
  const SensingMatrix A = unitary_dft(8);
  SgdAggregateDetector det(2, 8, 1.0, SgdParams{0.05, 0.05});
  Rng rng(7);
  Frame frame(A.data());
  for (const CVec& y : post_change_path(A, {1, 6}, 4.0, 1.0, 400, rng)) {
    frame.reset(y);
    det.step(frame);
  }
  EXPECT_GT(det.theta()(1), 1.0);
  EXPECT_GT(det.theta()(6), 1.0);
  EXPECT_LT(det.theta()(0), 0.5);
  EXPECT_EQ(det.support_estimate(), (std::vector<Index>{1, 6}));
  EXPECT_GE(det.theta().minCoeff(), 0.0);
}

TEST(Sgd, EnergyLlrIsZeroBeforeLearning) {
  const SensingMatrix A = unitary_dft(8);
  SgdEnergyDetector det(8, 1.0, 2, 0.5, SgdParams{});
  Rng rng(2);
  Frame frame(A.data());
  const CVec y = noise(8, 1.0, rng);
  frame.reset(y);
  det.step(frame);
  EXPECT_NEAR(det.last_llr(), 0.0, 1e-14);
}

TEST(Sgd, CorrelatorNeedsKnownSparsity) {
  try {
    SgdCorrelatorDetector det(0.1, std::nullopt, 20, 0.5, 1.0, SgdParams{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::unsupported);
  }
}

TEST(ParallelK, MetricIsMaxOverSubDetectors) {
  const SensingMatrix A = mub_select_columns(mub(7), 20);
  std::vector<DetectorPtr> subs;
  std::vector<std::unique_ptr<AggregateDetector>> refs;
  for (Index k = 1; k <= 4; ++k) {
    subs.push_back(std::make_unique<AggregateDetector>(aggregate_model(A.coherence(), k, 1.0, 1.0), k, 20));
    refs.push_back(std::make_unique<AggregateDetector>(aggregate_model(A.coherence(), k, 1.0, 1.0), k, 20));
  }
  ParallelKDetector det(std::move(subs));
  Rng rng(13);
  Frame frame(A.data());
  for (const CVec& y : post_change_path(A, {2, 4}, 1.0, 1.0, 30, rng)) {
    frame.reset(y);
    det.step(frame);
    double best = 0.0;
    for (auto& r : refs) best = std::max(best, r->step(frame));
    EXPECT_NEAR(det.metric(), best, 1e-12);
  }
  EXPECT_GE(det.leading_k(), 1u);
  EXPECT_LE(det.leading_k(), 4u);
}

TEST(Detectors, TracksStayNonNegativeAndCloneIsIndependent) {
  const SensingMatrix A = mub_select_columns(mub(7), 14);
  const double alpha = A.coherence();
  std::vector<DetectorPtr> dets;
  dets.push_back(std::make_unique<OptimalDetector>(A, 2, 1.0, 1.0));
  dets.push_back(std::make_unique<AggregateDetector>(aggregate_model(alpha, 2, 1.0, 1.0), 2, 14));
  dets.push_back(std::make_unique<EnergyDetector>(energy_model(alpha, 2, 1.0, 1.0, 7)));
  dets.push_back(std::make_unique<CorrelatorDetector>(correlator_model(alpha, 2, 14, 1.0, 1.0)));
  dets.push_back(std::make_unique<SgdAggregateDetector>(2, 14, 1.0, SgdParams{}));
  dets.push_back(std::make_unique<SgdEnergyDetector>(7, 1.0, std::nullopt, 0.5, SgdParams{}));
  dets.push_back(std::make_unique<SgdCorrelatorDetector>(alpha, 2, 14, 0.5, 1.0, SgdParams{}));
  Rng rng(21);
  Frame frame(A.data());
  for (auto& d : dets) {
    d->reset();
    DetectorPtr copy = d->clone();
    for (const CVec& y : post_change_path(A, {3, 10}, 1.0, 1.0, 60, rng)) {
      frame.reset(y);
      d->step(frame);
      for (double w : d->tracks()) EXPECT_GE(w, 0.0) << to_string(d->variant());
    }
    EXPECT_DOUBLE_EQ(copy->metric(), 0.0);
    d->reset();
    EXPECT_DOUBLE_EQ(d->metric(), 0.0);
  }
}

TEST(Variants, NamesRoundTrip) {
  for (const auto& [v, name] : kVariantNames) EXPECT_EQ(variant_from_string(name), v);
  EXPECT_THROW(variant_from_string("nope"), Error);
}
