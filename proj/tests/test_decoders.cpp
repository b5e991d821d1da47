#include <gtest/gtest.h>

#include "hamembed/decoders.hpp"
#include "hamembed/errors.hpp"
#include "hamembed/eval.hpp"
#include "hamembed/random.hpp"

using namespace hamembed;

namespace {

Mat random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng, double scale = 1.0) {
  Mat m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = scale * rng.uniform(-1.0, 1.0);
  return m;
}

}  // namespace

TEST(QuadDecoder, ReconstructionFormula) {
  decoders::QuadDecoder dec;
  dec.V = Mat::Zero(3, 2);
  dec.V(0, 0) = 1;
  dec.V(1, 1) = 2;
  dec.H = Mat::Zero(3, 4);
  dec.H(2, 1) = 1;  // y0*y1
  dec.H(2, 3) = 3;  // y1*y1
  Vec y(2);
  y << 2, -1;
  const Vec x = decoders::quad_reconstruct(dec, y);
  EXPECT_DOUBLE_EQ(x(0), 2);
  EXPECT_DOUBLE_EQ(x(1), -2);
  EXPECT_DOUBLE_EQ(x(2), -2 + 3);
  EXPECT_THROW(decoders::quad_reconstruct(dec, Vec::Zero(3)), ValidationError);
}

TEST(QuadDecoder, ZeroQuadraticPartIsLinear) {
  Rng rng(1);
  decoders::QuadDecoder dec{random_matrix(6, 3, rng), Mat::Zero(6, 9)};
  const Mat Y = random_matrix(3, 10, rng);
  EXPECT_LT((decoders::quad_reconstruct_batch(dec, Y) - dec.V * Y).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(LinearDecoder, MatchesLift) {
  Rng rng(2);
  const Mat S = random_matrix(8, 30, rng);
  const pod::PODBasis b = pod::pod_basis(S, 2);
  const Mat Y = random_matrix(4, 5, rng);
  EXPECT_EQ(decoders::linear_reconstruct(b, Y), pod::lift(b, Y));
}

TEST(QuadFit, RecoversExactlyQuadraticData) {
  Rng rng(5);
  const int d = 4;
  const int nf = 20;
  const decoders::QuadDecoder truth{random_matrix(nf, d, rng, 0.5), random_matrix(nf, d * d, rng, 0.2)};
  const Mat Y = random_matrix(d, 500, rng);
  const Mat X = decoders::quad_reconstruct_batch(truth, Y);
  const auto fit = decoders::fit_quad_decoder(Y, X);
  EXPECT_FALSE(fit.underdetermined);
  ASSERT_EQ(fit.history.size(), 600u);
  EXPECT_LT(fit.history.back(), fit.history.front());
  const Mat Ytest = random_matrix(d, 200, rng);
  const double rel = eval::relative_l2(decoders::quad_reconstruct_batch(truth, Ytest),
                                       decoders::quad_reconstruct_batch(fit.decoder, Ytest));
  EXPECT_LT(rel, 1e-4);
}

TEST(QuadFit, UnderdeterminedFlagged) {
  Rng rng(6);
  const Mat Y = random_matrix(4, 5, rng);
  decoders::QuadFitConfig cfg;
  cfg.epochs = 2;
  EXPECT_TRUE(decoders::fit_quad_decoder(Y, random_matrix(3, 5, rng), cfg).underdetermined);
}

TEST(QuadFit, Deterministic) {
  Rng rng(7);
  const Mat Y = random_matrix(2, 60, rng);
  const Mat X = random_matrix(5, 60, rng);
  decoders::QuadFitConfig cfg;
  cfg.epochs = 20;
  const auto a = decoders::fit_quad_decoder(Y, X, cfg);
  const auto b = decoders::fit_quad_decoder(Y, X, cfg);
  EXPECT_EQ(a.decoder.V, b.decoder.V);
  EXPECT_EQ(a.decoder.H, b.decoder.H);
}

TEST(QuadFit, BadInputs) {
  EXPECT_THROW(decoders::fit_quad_decoder(Mat::Zero(2, 3), Mat::Zero(4, 4)), ValidationError);
  Mat X = Mat::Zero(4, 3);
  X(0, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(decoders::fit_quad_decoder(Mat::Zero(2, 3), X), NumericalError);
  decoders::QuadFitConfig cfg;
  cfg.epochs = 0;
  EXPECT_THROW(decoders::fit_quad_decoder(Mat::Zero(2, 3), Mat::Zero(4, 3), cfg), ValidationError);
}
