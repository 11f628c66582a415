#include "support.hpp"

#include "stag/transforms.hpp"

#include <gtest/gtest.h>

using namespace stag;
using namespace stag::testing;
using Eigen::MatrixXd;

namespace {

// Dense DCT-II matrix built entry by entry, independent of DctBasis.
MatrixXd dense_dct(int length) {
  MatrixXd m(length, length);
  for (int k = 0; k < length; ++k)
    for (int t = 0; t < length; ++t) {
      const double a = k == 0 ? std::sqrt(1.0 / length) : std::sqrt(2.0 / length);
      m(k, t) = a * std::cos(M_PI * (t + 0.5) * k / length);
    }
  return m;
}

}  // namespace

TEST(Dct, BasisMatchesDenseOracleAndIsOrthonormal) {
  for (int length : {1, 2, 7, 90}) {
    const DctBasis b(length, length);
    EXPECT_LT((b.matrix() - dense_dct(length)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((b.matrix() * b.matrix().transpose() - MatrixXd::Identity(length, length))
                  .cwiseAbs()
                  .maxCoeff(),
              1e-12);
  }
}

TEST(Dct, ConstantSignalIsPureDc) {
  const DctBasis b(4, 4);
  const MatrixXd c = dct_encode(MatrixXd::Constant(4, 1, 5.0), b);
  EXPECT_NEAR(c(0, 0), 10.0, 1e-12);
  for (int k = 1; k < 4; ++k) EXPECT_NEAR(c(k, 0), 0.0, 1e-12);
}

TEST(Dct, PaperDefaultShape) {
  const DctBasis b(90, 20);
  std::mt19937_64 rng(1);
  const MatrixXd c = dct_encode(random_matrix(90, 7, rng), b);
  EXPECT_EQ(c.rows(), 20);
  EXPECT_EQ(c.cols(), 7);
}

TEST(Dct, RoundTripAtFullRank) {
  std::mt19937_64 rng(2);
  const DctBasis b8(8, 8);
  const MatrixXd x = random_matrix(8, 3, rng);
  EXPECT_LT((dct_decode(dct_encode(x, b8), b8) - x).cwiseAbs().maxCoeff(), 1e-9);

  const MatrixXd root = random_matrix(30, 3, rng);
  const MatrixXd padded = pad_replicate(root, 60);
  const DctBasis b90(90, 90);
  EXPECT_LT((dct_decode(dct_encode(padded, b90), b90) - padded).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((dense_dct(90).transpose() * (dense_dct(90) * padded) - padded).cwiseAbs().maxCoeff(),
            1e-9);
}

TEST(Dct, ZeroCoefficientsDecodeToZero) {
  const DctBasis b(12, 5);
  EXPECT_EQ(dct_decode(MatrixXd::Zero(5, 4), b).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Dct, LinearityAndParseval) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int length = 2 + trial * 4;
    const DctBasis b(length, length);
    const MatrixXd x = random_matrix(length, 3, rng), y = random_matrix(length, 3, rng);
    const double alpha = 1.7, beta = -0.4;
    EXPECT_LT((dct_encode(MatrixXd(alpha * x + beta * y), b) -
               (alpha * dct_encode(x, b) + beta * dct_encode(y, b)))
                  .cwiseAbs()
                  .maxCoeff(),
              1e-9);
    EXPECT_NEAR(dct_encode(x, b).norm(), x.norm(), 1e-9);
  }
}

TEST(Dct, TruncationErrorIsNonIncreasingInK) {
  std::mt19937_64 rng(4);
  const MatrixXd x = random_matrix(24, 2, rng);
  double previous = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= 24; ++k) {
    const DctBasis b(24, k);
    const double err = (dct_decode(dct_encode(x, b), b) - x).norm();
    EXPECT_LE(err, previous + 1e-12) << "K = " << k;
    previous = err;
  }
  EXPECT_LT(previous, 1e-9);
}

TEST(Dct, TruncationOfRampIsBestProjection) {
  // The orthogonal projection onto the first 20 basis vectors is the least
  // squares fit in that span; compare against the normal-equations solution.
  MatrixXd ramp(90, 1);
  for (int t = 0; t < 90; ++t) ramp(t, 0) = 0.03 * t - 1.0;
  const DctBasis b(90, 20);
  const MatrixXd recon = dct_decode(dct_encode(ramp, b), b);
  const MatrixXd span = dense_dct(90).topRows(20).transpose();
  const MatrixXd best = span * span.colPivHouseholderQr().solve(ramp);
  EXPECT_LE((recon - ramp).cwiseAbs().maxCoeff(), (best - ramp).cwiseAbs().maxCoeff() + 1e-9);
  EXPECT_LT((recon - best).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Dct, PaddedEncodingMatchesExplicitPadding) {
  std::mt19937_64 rng(5);
  for (int t_obs : {1, 5, 30}) {
    const MatrixXd observed = random_matrix(t_obs, 4, rng);
    const DctBasis b(t_obs + 9, std::min(t_obs + 9, 7));
    EXPECT_LT((dct_encode_padded(observed, b) - dct_encode(pad_replicate(observed, 9), b))
                  .cwiseAbs()
                  .maxCoeff(),
              1e-12);
  }
}

TEST(Dct, RejectsBadShapes) {
  EXPECT_THROW(DctBasis(0, 1), ShapeError);
  EXPECT_THROW(DctBasis(5, 6), ShapeError);
  EXPECT_THROW(DctBasis(5, 0), ShapeError);
  const DctBasis b(5, 3);
  EXPECT_THROW(dct_encode(MatrixXd::Zero(4, 1), b), ShapeError);
  EXPECT_THROW(dct_decode(MatrixXd::Zero(5, 1), b), ShapeError);
}

TEST(Padding, ReplicatesLastRow) {
  MatrixXd ab(2, 1);
  ab << 1, 2;
  MatrixXd expected(4, 1);
  expected << 1, 2, 2, 2;
  EXPECT_EQ(pad_replicate(ab, 2), expected);
  EXPECT_EQ(pad_replicate(ab, 0), ab);
  EXPECT_THROW(pad_replicate(MatrixXd(0, 3), 2), ShapeError);
}

TEST(Normalize, ScalesAndInverts) {
  Eigen::RowVector3d p(1, 2, 3);
  EXPECT_TRUE(normalize(p, 0.2).isApprox(Eigen::RowVector3d(0.2, 0.4, 0.6), 1e-15));
  EXPECT_EQ(normalize(p, 1.0), p);
  std::mt19937_64 rng(6);
  const MatrixXd x = random_matrix(6, 5, rng, -10, 10);
  EXPECT_LT((denormalize(normalize(x, 0.2), 0.2) - x).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(normalize(x, 0.0), ShapeError);
  EXPECT_THROW(denormalize(x, -1.0), ShapeError);
}
