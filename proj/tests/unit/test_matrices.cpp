#include "sparsecd/augment.hpp"
#include "sparsecd/bases.hpp"
#include "sparsecd/gold.hpp"
#include "sparsecd/matrix_io.hpp"
#include "sparsecd/projection.hpp"
#include "sparsecd/random_matrices.hpp"
#include "sparsecd/sic_povm.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace sparsecd;

namespace {

// Brute-force coherence straight from the definition.
double coherence_oracle(const CMat& A) {
  double best = 0.0;
  for (Index i = 0; i < A.cols(); ++i)
    for (Index j = i + 1; j < A.cols(); ++j) best = std::max(best, std::abs(A.col(i).dot(A.col(j))));
  return best;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("sparsecd_" + name)).string();
}

}  // namespace

TEST(Coherence, MatchesBruteForce) {
  Rng rng(5);
  const SensingMatrix A = random_matrix(RandomKind::gaussian, 7, 40, rng);
  EXPECT_NEAR(A.coherence(), coherence_oracle(A.data()), 1e-12);
}

TEST(Unitary, DftIsUnitaryWithZeroCoherence) {
  const SensingMatrix A = unitary_dft(8);
  EXPECT_LT((A.data().adjoint() * A.data() - CMat::Identity(8, 8)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT(A.coherence(), 1e-12);
}

TEST(Unitary, RandomUnitary) {
  Rng rng(2);
  const SensingMatrix U = random_unitary(6, rng);
  EXPECT_LT((U.data().adjoint() * U.data() - CMat::Identity(6, 6)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(RandomMatrices, UnitNormColumns) {
  Rng rng(9);
  for (auto kind : {RandomKind::gaussian, RandomKind::bernoulli, RandomKind::dft_rows}) {
    const SensingMatrix A = random_matrix(kind, 8, 40, rng);
    EXPECT_EQ(A.rows(), 8);
    EXPECT_EQ(A.cols(), 40);
    for (Index j = 0; j < A.cols(); ++j) EXPECT_NEAR(A.col(j).norm(), 1.0, 1e-12);
  }
}

TEST(RandomMatrices, DftRowsAreRowOrthogonal) {
  Rng rng(1);
  const SensingMatrix A = random_matrix(RandomKind::dft_rows, 8, 40, rng);
  const CMat G = A.data() * A.data().adjoint();
  EXPECT_LT((G - 5.0 * CMat::Identity(8, 8)).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_THROW(random_matrix(RandomKind::dft_rows, 41, 40, rng), Error);
}

TEST(Sic, BundledFiducialsAreEquiangular) {
  for (Index d : {2, 3, 4, 5, 6, 7, 8}) {
    ASSERT_TRUE(has_bundled_fiducial(d)) << d;
    const Fiducial f = bundled_fiducial(d);
    const CMat V = weyl_heisenberg_orbit(f.vector);
    EXPECT_EQ(V.cols(), d * d);
    EXPECT_LT(equiangular_residual(V, 1.0 / static_cast<double>(d + 1)), 1e-6) << d;
  }
}

TEST(Sic, CoherenceOfFullFrame) {
  const SensingMatrix A = sic_povm(bundled_fiducial(5), 25);
  EXPECT_NEAR(A.coherence(), 1.0 / std::sqrt(6.0), 1e-6);
  EXPECT_NEAR(A.coherence(), coherence_oracle(A.data()), 1e-12);
}

TEST(Sic, FileFiducialsLoad) {
  for (int d : {13, 16, 25, 31}) {
    const Fiducial f = load_fiducial(std::string(SPARSECD_DATA_DIR) + "/fiducials/d" + std::to_string(d) + ".txt");
    EXPECT_EQ(f.d, d);
    EXPECT_LT(fiducial_residual(f.vector), 1e-6) << d;
  }
}

TEST(Sic, NumericSearchSmallDimension) {
  Rng rng(4);
  const Fiducial f = find_fiducial(4, rng);
  EXPECT_LT(fiducial_residual(f.vector), 1e-9);
}

TEST(Sic, MalformedFiducialIsRejected) {
  std::istringstream in("0.5 0.1\nnot-a-number\n");
  EXPECT_THROW(read_fiducial(in), Error);
}

TEST(Mub, CoherenceIsInverseSqrtD) {
  for (Index d : {3, 5, 7, 11}) {
    const BasisFamily fam = mub(d);
    EXPECT_EQ(static_cast<Index>(fam.bases.size()), d + 1);
    EXPECT_NEAR(fam.cross_coherence, 1.0 / std::sqrt(static_cast<double>(d)), 1e-9);
    const SensingMatrix A = mub_select_columns(fam, 2 * d);
    EXPECT_NEAR(A.coherence(), 1.0 / std::sqrt(static_cast<double>(d)), 1e-9);
    for (const CMat& B : fam.bases) EXPECT_LT((B.adjoint() * B - CMat::Identity(d, d)).cwiseAbs().maxCoeff(), 1e-10);
  }
  EXPECT_THROW(mub(9), Error);
}

TEST(Amub, BasesAreOrthonormalWithBoundedCrossCoherence) {
  for (Index d : {4, 6}) {
    const BasisFamily fam = amub(d);
    for (const CMat& B : fam.bases) EXPECT_LT((B.adjoint() * B - CMat::Identity(d, d)).cwiseAbs().maxCoeff(), 1e-10);
    const SensingMatrix A = amub_select_columns(fam, 3 * d);
    EXPECT_NEAR(A.coherence(), coherence_oracle(A.data()), 1e-12);
    EXPECT_LT(A.coherence(), 1.0);
  }
}

TEST(Gold, CorrelationBoundAttained) {
  for (int n : {5, 6, 7}) {
    const GoldFamily fam = gold_family(n);
    EXPECT_EQ(fam.length, (Index{1} << n) - 1);
    EXPECT_EQ(fam.sequences.size(), static_cast<std::size_t>(fam.length + 2));
    EXPECT_LE(fam.max_cross_correlation, fam.bound + 1e-12);
    EXPECT_NEAR(fam.max_cross_correlation, fam.bound, 1e-12) << n;
  }
  EXPECT_THROW(preferred_pair(8), Error);
}

TEST(Gold, NonPreferredPairIsRejected) {
  PreferredPair bad{5, {5, 2}, {5, 3}};
  EXPECT_THROW(gold_family(bad), Error);
}

TEST(Augment, CoherenceMatchesExplicitMatrix) {
  const GoldFamily fam = gold_family(5);
  for (Index Delta : {0, 1, 2, 4}) {
    const CMat codes = gold_codes_for_offsets(fam, Delta).leftCols(20);
    const SensingMatrix A = augment_with_offsets(codes, Delta);
    EXPECT_EQ(A.rows(), 31 + Delta);
    EXPECT_EQ(A.cols(), 20 * (Delta + 1));
    EXPECT_NEAR(A.coherence(), coherence_oracle(A.data()), 1e-12) << Delta;
  }
}

TEST(Augment, ComplexCodesMatchExplicitMatrix) {
  const Fiducial f = bundled_fiducial(7);
  const CMat codes = sic_codes_for_offsets(f, 2).leftCols(10);
  const SensingMatrix A = augment_with_offsets(codes, 2, MatrixKind::sic_povm);
  EXPECT_NEAR(A.coherence(), coherence_oracle(A.data()), 1e-12);
  EXPECT_EQ(augmented_code_offset(7, 2), (std::pair<Index, Index>{2, 1}));
}

TEST(Projection, ComplementProjector) {
  Rng rng(8);
  const SensingMatrix A = random_matrix(RandomKind::gaussian, 6, 10, rng);
  const CMat B = A.data().leftCols(3);
  const CMat P = orthogonal_complement_projection(B);
  EXPECT_LT((P * P - P).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((P.adjoint() - P).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((P * B).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(P.trace().real(), 3.0, 1e-12);
  EXPECT_LT((orthogonal_complement_projection(CMat(6, 0), 6) - CMat::Identity(6, 6)).cwiseAbs().maxCoeff(), 1e-15);
  CMat D(6, 2);
  D.col(0) = B.col(0);
  D.col(1) = 2.0 * B.col(0);
  EXPECT_THROW(orthogonal_complement_projection(D), Error);
}

TEST(MatrixIo, BinaryAndTextRoundTripExactly) {
  Rng rng(3);
  const SensingMatrix A = random_matrix(RandomKind::gaussian, 5, 9, rng);
  for (const std::string name : {"m.bin", "m.txt"}) {
    const std::string path = temp_path(name);
    save_matrix(path, A);
    const SensingMatrix B = load_matrix(path);
    EXPECT_EQ(B.kind(), A.kind());
    EXPECT_EQ(B.rows(), A.rows());
    EXPECT_EQ(B.cols(), A.cols());
    EXPECT_TRUE(B.data() == A.data()) << name;
    std::remove(path.c_str());
  }
}

TEST(MatrixIo, TruncatedFileIsRejected) {
  const std::string path = temp_path("trunc.bin");
  {
    std::ofstream os(path, std::ios::binary);
    os << "SCDM";
  }
  EXPECT_THROW(load_matrix(path), Error);
  std::remove(path.c_str());
  EXPECT_THROW(load_matrix(temp_path("does_not_exist.bin")), Error);
}

TEST(SensingMatrixType, RejectsNonUnitColumns) {
  CMat A = CMat::Identity(3, 3);
  A(0, 0) = 2.0;
  EXPECT_THROW(SensingMatrix(A, MatrixKind::custom), Error);
  EXPECT_NO_THROW(SensingMatrix::normalized(A, MatrixKind::custom));
}
