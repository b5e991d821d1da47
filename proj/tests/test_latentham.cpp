#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "hamembed/diffkit/params.hpp"
#include "hamembed/errors.hpp"
#include "hamembed/integrate.hpp"
#include "hamembed/latentham.hpp"
#include "hamembed/random.hpp"

using namespace hamembed;
using namespace hamembed::latentham;

namespace {

Mat random_lower(Rng& rng, int k, double diag, double off) {
  Mat L = Mat::Zero(k, k);
  for (int r = 0; r < k; ++r)
    for (int c = 0; c <= r; ++c) L(r, c) = r == c ? diag + rng.uniform(0, off) : rng.uniform(-off, off);
  return L;
}

Vec random_vec(Rng& rng, int n, double scale) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.uniform(-scale, scale);
  return v;
}

// Eigenvalues of a symmetric 3x3 matrix from the roots of its characteristic
// polynomial (trigonometric form).
Vec char_poly_eigs(const Mat& a) {
  const double q = a.trace() / 3.0;
  const double p1 = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
  const double p2 = std::pow(a(0, 0) - q, 2) + std::pow(a(1, 1) - q, 2) + std::pow(a(2, 2) - q, 2) + 2 * p1;
  const double p = std::sqrt(p2 / 6.0);
  const Mat b = (a - q * Mat::Identity(3, 3)) / p;
  const double r = std::clamp(b.determinant() / 2.0, -1.0, 1.0);
  const double phi = std::acos(r) / 3.0;
  Vec e(3);
  e(0) = q + 2 * p * std::cos(phi);
  e(2) = q + 2 * p * std::cos(phi + 2 * std::numbers::pi / 3);
  e(1) = 3 * q - e(0) - e(2);
  return e;
}

LatentHamiltonian random_sos(Rng& rng, Variant v, int m) {
  return SosHamiltonian::from_factor(v, m, random_lower(rng, lifted_dim(v, m), 0.3, 0.3));
}

}  // namespace

TEST(LatentH, PointValues) {
  auto quad = SosHamiltonian::from_factor(Variant::QuadraticSOS, 1, Mat::Identity(3, 3), 0.0);
  EXPECT_DOUBLE_EQ(latent_h(quad, Vec::Zero(2)), 1.0);
  auto quart = SosHamiltonian::from_matrix(Variant::QuarticSOS, 1, Mat::Identity(5, 5), 0.0);
  EXPECT_DOUBLE_EQ(latent_h(quart, Vec{{1.0, 1.0}}), 4.0);
  CubicPoly poly(1);
  poly.set({1, 1}, 0.5);
  poly.set({0, 0}, 0.5);
  poly.set({0, 0, 0}, 1.0 / 3.0);
  EXPECT_NEAR(latent_h(poly, Vec{{-3.0, 0.0}}), -4.5, 1e-14);
  EXPECT_THROW(latent_h(quad, Vec::Zero(3)), ValidationError);
}

TEST(LatentGrad, PointValues) {
  auto quad = SosHamiltonian::from_factor(Variant::QuadraticSOS, 1, Mat::Identity(3, 3), 0.0);
  EXPECT_TRUE(latent_grad(quad, Vec{{1.0, 2.0}}).isApprox(Vec{{2.0, 4.0}}));
  auto quart = SosHamiltonian::from_matrix(Variant::QuarticSOS, 1, Mat::Identity(5, 5), 0.0);
  EXPECT_TRUE(latent_grad(quart, Vec{{1.0, 1.0}}).isApprox(Vec{{6.0, 6.0}}));
}

TEST(LatentGrad, MatchesFiniteDifferences) {
  Rng rng(3);
  for (Variant v : {Variant::QuadraticSOS, Variant::QuarticSOS, Variant::CubicPoly}) {
    for (int m : {1, 2, 3}) {
      LatentHamiltonian model = is_sos(v) ? random_sos(rng, v, m) : LatentHamiltonian(CubicPoly(m));
      if (auto* poly = std::get_if<CubicPoly>(&model)) poly->coeffs() = random_vec(rng, static_cast<int>(poly->coeffs().size()), 1.0);
      for (int trial = 0; trial < 10; ++trial) {
        Vec y = random_vec(rng, 2 * m, 1.5);
        Vec fd(2 * m);
        for (int i = 0; i < 2 * m; ++i) {
          Vec a = y, b = y;
          a(i) += 1e-6;
          b(i) -= 1e-6;
          fd(i) = (latent_h(model, a) - latent_h(model, b)) / 2e-6;
        }
        Vec g = latent_grad(model, y);
        EXPECT_LT((g - fd).norm() / std::max(1.0, fd.norm()), 1e-7) << variant_name(v) << " m=" << m;
      }
    }
  }
}

TEST(LatentField, RotationAndIdentities) {
  Mat Q = Mat::Zero(3, 3);
  Q.topLeftCorner(2, 2) = 0.5 * Mat::Identity(2, 2);
  auto half = SosHamiltonian::from_matrix(Variant::QuadraticSOS, 1, Q, 1.0);
  Vec y{{0.3, -0.7}};
  EXPECT_TRUE(latent_vector_field(half, y).isApprox(symplectic_form(1) * y));
  EXPECT_TRUE(latent_vector_field(half, Vec::Zero(2)).isZero());
  Rng rng(8);
  auto model = random_sos(rng, Variant::QuarticSOS, 2);
  Vec z = random_vec(rng, 4, 1.0);
  EXPECT_TRUE((symplectic_form(2).transpose() * latent_vector_field(model, z)).isApprox(latent_grad(model, z)));
}

TEST(MinEig, KnownAndCharacteristicPolynomial) {
  auto id = SosHamiltonian::from_factor(Variant::QuadraticSOS, 1, Mat::Identity(3, 3), 0.0);
  EXPECT_NEAR(sos_min_eig(id), 1.0, 1e-14);
  Mat L = Vec{{2.0, 1.0, 1.0}}.asDiagonal();
  EXPECT_NEAR(sos_min_eig(SosHamiltonian::from_factor(Variant::QuadraticSOS, 1, L)), 1.0 + kDefaultEps, 1e-14);
  Rng rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    auto model = SosHamiltonian::from_factor(Variant::QuadraticSOS, 1, random_lower(rng, 3, 0.1, 1.0));
    EXPECT_NEAR(sos_min_eig(model), char_poly_eigs(model.Q)(2), 1e-8);
    EXPECT_GE(sos_min_eig(model), kDefaultEps * (1 - 1e-6));
  }
  EXPECT_THROW(sos_min_eig(CubicPoly(1)), ValidationError);
}

TEST(StabilityBound, Examples) {
  auto id = SosHamiltonian::from_matrix(Variant::QuadraticSOS, 1, Mat::Identity(3, 3), 0.0);
  Vec y0{{std::sqrt(2.0), std::sqrt(2.0)}};
  EXPECT_NEAR(stability_bound(id, y0), 4.0, 1e-14);
  auto zero_w = SosHamiltonian::from_matrix(Variant::QuarticSOS, 1, Mat::Identity(5, 5), 0.0);
  EXPECT_EQ(stability_bound(zero_w, Vec::Zero(2)), 0.0);
  EXPECT_THROW(stability_bound(CubicPoly(1), Vec::Zero(2)), ValidationError);
}

TEST(StabilityBound, QuarticRolloutRespectsBound) {
  Rng rng(14);
  for (int trial = 0; trial < 5; ++trial) {
    auto model = random_sos(rng, Variant::QuarticSOS, 1);
    const auto& sos = std::get<SosHamiltonian>(model);
    Vec y = random_vec(rng, 2, 1.0);
    const double bound = stability_bound(model, y);
    integrate::MidpointStepper stepper([&](const Vec& s) { return latent_vector_field(model, s); });
    double worst = certified_quantity(sos, y);
    for (int k = 0; k < 1000; ++k) {
      y = stepper.step(y, 0.01);
      worst = std::max(worst, certified_quantity(sos, y));
    }
    EXPECT_LE(worst, bound * (1 + 1e-8));
  }
}

TEST(PsdDecompose, Examples) {
  Mat Q = Mat::Zero(6, 6);
  Q(2, 2) = 1.0;
  Q(5, 5) = 1.0;
  PsdDecomposition dec = psd_decompose(Q);
  EXPECT_EQ(dec.rank, 2);
  EXPECT_TRUE(dec.Q1.isApprox(Mat::Identity(2, 2)));
  Mat V = Mat::Zero(2, 6);
  V(0, 2) = 1.0;
  V(1, 5) = 1.0;
  EXPECT_TRUE(dec.V.isApprox(V));
  EXPECT_EQ(dec.dropped.size(), 4);

  PsdDecomposition id = psd_decompose(Mat::Identity(4, 4));
  EXPECT_EQ(id.rank, 4);
  EXPECT_TRUE(id.V.isApprox(Mat::Identity(4, 4)));
  EXPECT_TRUE(id.Q1.isApprox(Mat::Identity(4, 4)));

  try {
    psd_decompose(Mat::Zero(3, 3));
    FAIL();
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("no positive part"), std::string::npos);
  }
  EXPECT_THROW(psd_decompose(Vec{{1.0, -1.0}}.asDiagonal().toDenseMatrix()), NumericalError);
}

TEST(PsdDecompose, ReconstructsRandomLowRank) {
  Rng rng(15);
  Mat F(5, 2);
  for (Eigen::Index i = 0; i < F.size(); ++i) F(i) = rng.uniform(-1, 1);
  Mat Q = F * F.transpose();
  PsdDecomposition dec = psd_decompose(Q, 1e-9);
  EXPECT_EQ(dec.rank, 2);
  EXPECT_LT((dec.V.transpose() * dec.Q1 * dec.V - Q).norm(), 1e-10);
  EXPECT_LT((dec.V * dec.V.transpose() - Mat::Identity(2, 2)).norm(), 1e-10);
}

TEST(SosProperties, NonNegativityAndRadialGrowth) {
  Rng rng(16);
  for (Variant v : {Variant::QuadraticSOS, Variant::QuarticSOS}) {
    auto model = random_sos(rng, v, 2);
    for (int i = 0; i < 100000; ++i) ASSERT_GE(latent_h(model, random_vec(rng, 4, 10.0)), 0.0);
    for (int dir = 0; dir < 100; ++dir) {
      Vec u = random_vec(rng, 4, 1.0).normalized();
      double prev = latent_h(model, 5.0 * u);
      for (double t = 5.5; t <= 50.0; t += 0.5) {
        const double cur = latent_h(model, t * u);
        EXPECT_GE(cur, prev);
        prev = cur;
      }
    }
  }
}

TEST(SosProperties, ConservationAlongRollouts) {
  Rng rng(17);
  for (Variant v : {Variant::QuadraticSOS, Variant::QuarticSOS}) {
    auto model = random_sos(rng, v, 2);
    Vec y = random_vec(rng, 4, 0.8);
    const double h0 = latent_h(model, y);
    integrate::MidpointStepper stepper([&](const Vec& s) { return latent_vector_field(model, s); });
    double worst = 0.0;
    for (int k = 0; k < 10000; ++k) {
      y = stepper.step(y, 0.002);
      worst = std::max(worst, std::abs(latent_h(model, y) - h0) / h0);
    }
    EXPECT_LT(worst, v == Variant::QuadraticSOS ? 1e-12 : 1e-6) << variant_name(v);
  }
}

TEST(CubicPoly, UnboundedOrbitFromNegativeState) {
  CubicPoly poly(1);
  poly.set({1, 1}, 0.5);
  poly.set({0, 0}, 0.5);
  poly.set({0, 0, 0}, 1.0 / 3.0);
  LatentHamiltonian model = poly;
  integrate::MidpointStepper stepper([&](const Vec& s) { return latent_vector_field(model, s); });
  Vec x{{-3.0, -3.0}};
  double t = 0.0;
  double h = 0.01;
  while (x.norm() <= 1e3 && t < 10.0) {
    if (h * x.norm() > 0.05) h = 0.05 / x.norm();
    x = stepper.step(x, h);
    t += h;
  }
  EXPECT_GT(x.norm(), 1e3);
  EXPECT_LT(t, 10.0);
}

TEST(Params, TapeMatchesDoubleAndFiniteDifferences) {
  Rng rng(18);
  for (Variant v : {Variant::QuadraticSOS, Variant::QuarticSOS, Variant::CubicPoly}) {
    const int m = 2;
    diffkit::ParamLayout layout;
    add_latent_segment(layout, v, m);
    diffkit::ParamVector params(layout);
    init_latent(params, v, m, rng, 0.5, 0.2);
    LatentHamiltonian model = latent_from_params(params, v, m);
    Mat Y(4, 6);
    for (Eigen::Index i = 0; i < Y.size(); ++i) Y(i) = rng.uniform(-1, 1);

    diffkit::Tape tape;
    diffkit::TapeBinding bind(tape, params);
    diffkit::Var y = tape.constant(Y);
    diffkit::Var g = latent_grad_tape(v, m, bind[kHamSegment], y);
    diffkit::Var hv = latent_h_tape(v, m, bind[kHamSegment], y);
    for (int s = 0; s < 6; ++s) {
      EXPECT_LT((g.value().col(s) - latent_grad(model, Y.col(s))).norm(), 1e-12);
      EXPECT_NEAR(hv.value()(0, s), latent_h(model, Y.col(s)), 1e-12);
    }
    Mat W(4, 6);
    for (Eigen::Index i = 0; i < W.size(); ++i) W(i) = rng.uniform(-1, 1);
    auto loss = [&](diffkit::Tape& t, diffkit::Var theta) {
      return sum(hadamard(latent_grad_tape(v, m, theta, t.constant(Y)), t.constant(W))) +
             mean(square(latent_h_tape(v, m, theta, t.constant(Y))));
    };
    diffkit::Tape t2;
    diffkit::TapeBinding b2(t2, params);
    t2.backward(loss(t2, b2[kHamSegment]));
    Vec grad = b2.gather_grad();
    Vec fd(grad.size());
    for (Eigen::Index i = 0; i < grad.size(); ++i) {
      diffkit::ParamVector a = params, b = params;
      a.values()(i) += 1e-5;
      b.values()(i) -= 1e-5;
      diffkit::Tape ta, tb;
      diffkit::TapeBinding ba(ta, a), bb(tb, b);
      fd(i) = (loss(ta, ba[kHamSegment]).scalar() - loss(tb, bb[kHamSegment]).scalar()) / 2e-5;
    }
    EXPECT_LT((grad - fd).norm() / fd.norm(), 1e-6) << variant_name(v);
  }
}

TEST(Variants, NamesRoundTrip) {
  for (Variant v : {Variant::QuadraticSOS, Variant::QuarticSOS, Variant::CubicPoly})
    EXPECT_EQ(parse_variant(variant_name(v)), v);
  EXPECT_THROW(parse_variant("linear"), ValidationError);
}
