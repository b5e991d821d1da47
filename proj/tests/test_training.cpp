#include <cmath>

#include <gtest/gtest.h>

#include "hamembed/errors.hpp"
#include "hamembed/hamsys.hpp"
#include "hamembed/integrate.hpp"
#include "hamembed/training.hpp"

using namespace hamembed;
using namespace hamembed::training;

namespace {

Mat random_mat(Rng& rng, Eigen::Index r, Eigen::Index c, double scale) {
  Mat m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = rng.uniform(-scale, scale);
  return m;
}

// Linear encoder/decoder (no hidden layers) with given matrices and a
// quadratic latent Hamiltonian of factor L.
EmbeddingModel linear_model(const Mat& enc, const Mat& dec, const Mat& L, Variant v = Variant::QuadraticSOS) {
  const int n = static_cast<int>(enc.cols() / 2);
  const int m = static_cast<int>(enc.rows() / 2);
  EmbeddingModel model = make_model(n, m, v, {}, 0);
  model.params.set("enc.W0", enc);
  model.params.set("enc.b0", Mat::Zero(2 * m, 1));
  model.params.set("dec.W0", dec);
  model.params.set("dec.b0", Mat::Zero(2 * n, 1));
  Mat theta(L.rows() * (L.rows() + 1) / 2, 1);
  Eigen::Index idx = 0;
  for (Eigen::Index r = 0; r < L.rows(); ++r)
    for (Eigen::Index c = 0; c <= r; ++c) theta(idx++, 0) = L(r, c);
  model.params.set(latentham::kHamSegment, theta);
  model.eps = 0.0;
  return model;
}

// Half-identity factor: H(y) = 1/2 y'y.
Mat half_identity_factor(int m) {
  Mat L = Mat::Zero(2 * m + 1, 2 * m + 1);
  L.topLeftCorner(2 * m, 2 * m) = std::sqrt(0.5) * Mat::Identity(2 * m, 2 * m);
  return L;
}

Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x) {
  Vec g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec a = x, b = x;
    a(i) += 1e-5;
    b(i) -= 1e-5;
    g(i) = (f(a) - f(b)) / 2e-5;
  }
  return g;
}

struct PendulumData {
  Mat X;
  Mat D;
};

PendulumData pendulum_data(std::uint64_t seed, int ics = 20) {
  auto sys = hamsys::make_pendulum();
  auto x0s = hamsys::sample_initial_conditions(sys, {{{-3, 3}, {-3, 3}}, 2.0, ics, seed});
  Vec grid = integrate::uniform_grid(0, 20, 25);
  PendulumData d{Mat(2, 25 * ics), Mat(2, 25 * ics)};
  for (int i = 0; i < ics; ++i) {
    auto t = integrate::integrate_trajectory(sys, x0s[static_cast<std::size_t>(i)], grid);
    d.X.middleCols(25 * i, 25) = t.states;
    d.D.middleCols(25 * i, 25) = t.derivs;
  }
  return d;
}

}  // namespace

TEST(Losses, EncDecExamples) {
  EmbeddingModel id = linear_model(Mat::Identity(2, 2), Mat::Identity(2, 2), half_identity_factor(1));
  Rng rng(1);
  Mat X = random_mat(rng, 2, 7, 1.0);
  EXPECT_NEAR(loss_encdec(id, X), 0.0, 1e-30);
  EmbeddingModel shifted = id;
  shifted.params.set("dec.b0", Mat::Constant(2, 1, 0.3));
  EXPECT_NEAR(loss_encdec(shifted, X), 0.09, 1e-15);
  EmbeddingModel zero = make_model(1, 1, Variant::QuadraticSOS, {4}, 3);
  zero.params.values().setZero();
  EXPECT_EQ(loss_encdec(zero, Mat::Zero(2, 1)), 0.0);
  EXPECT_THROW(loss_encdec(id, Mat::Zero(3, 2)), ValidationError);
  EXPECT_THROW(loss_encdec(id, Mat::Zero(2, 0)), ValidationError);
}

TEST(Losses, SympExamples) {
  EmbeddingModel id = linear_model(Mat::Identity(2, 2), Mat::Identity(2, 2), half_identity_factor(1));
  Rng rng(2);
  Mat X = random_mat(rng, 2, 5, 1.0);
  EXPECT_NEAR(loss_symp(id, X), 0.0, 1e-30);
  EmbeddingModel twice = linear_model(2.0 * Mat::Identity(2, 2), Mat::Identity(2, 2), half_identity_factor(1));
  EXPECT_NEAR(loss_symp(twice, X), 4.5, 1e-12);
  // A random symplectic matrix: shear then rotation-like exponential.
  Mat S = Mat::Identity(4, 4);
  S.topRightCorner(2, 2) << 0.7, 0.2, 0.2, -0.4;
  Mat R = Mat::Identity(4, 4);
  R.bottomLeftCorner(2, 2) << 1.1, -0.3, -0.3, 0.5;
  Mat sym = S * R;
  ASSERT_LT((sym.transpose() * symplectic_form(2) * sym - symplectic_form(2)).norm(), 1e-12);
  EmbeddingModel lin = linear_model(sym, sym.inverse(), half_identity_factor(2));
  EXPECT_LT(loss_symp(lin, random_mat(rng, 4, 6, 1.0)), 1e-28);
  EXPECT_THROW(make_model(2, 1, Variant::QuadraticSOS, {4}, 0), ValidationError);
}

TEST(Losses, DeriExamples) {
  EmbeddingModel id = linear_model(Mat::Identity(2, 2), Mat::Identity(2, 2), half_identity_factor(1));
  Rng rng(3);
  Mat X = random_mat(rng, 2, 9, 1.0);
  Mat D = symplectic_form(1) * X;
  EXPECT_NEAR(loss_deri(id, X, D), 0.0, 1e-28);
  EmbeddingModel flat = linear_model(Mat::Identity(2, 2), Mat::Identity(2, 2), Mat::Zero(3, 3));
  EXPECT_EQ(loss_deri(flat, X, Mat::Zero(2, 9)), 0.0);
  EXPECT_THROW(loss_deri(id, X, Mat()), ValidationError);
  EXPECT_THROW(loss_deri(id, X, Mat::Zero(2, 3)), ValidationError);
}

TEST(Losses, TotalExamples) {
  EmbeddingModel id = linear_model(Mat::Identity(2, 2), Mat::Identity(2, 2), half_identity_factor(1));
  Rng rng(4);
  Mat X = random_mat(rng, 2, 4, 1.0);
  Mat D = symplectic_form(1) * X;
  TrainingConfig zero;
  zero.lambda1 = zero.lambda2 = zero.lambda3 = 0.0;
  const double l1 = 1e-4 * 2 * std::sqrt(0.5);
  EXPECT_NEAR(total_loss(id, X, D, zero), l1, 1e-18);
  EXPECT_NEAR(total_loss(id, X, D, TrainingConfig{}), l1, 1e-15);
  EmbeddingModel quiet = linear_model(Mat::Identity(2, 2), Mat::Identity(2, 2), Mat::Zero(3, 3));
  EXPECT_EQ(total_loss(quiet, X, Mat::Zero(2, 4), TrainingConfig{}), 0.0);
  TrainingConfig defaults;
  EXPECT_EQ(defaults.lambda1, 0.1);
  EXPECT_EQ(defaults.lambda2, 1.0);
  EXPECT_EQ(defaults.lambda3, 1.0);
}

TEST(Losses, DeriRespondsToLatentParameters) {
  EmbeddingModel id = linear_model(Mat::Identity(2, 2), Mat::Identity(2, 2), half_identity_factor(1));
  Rng rng(5);
  Mat X = random_mat(rng, 2, 9, 1.0);
  Mat D = symplectic_form(1) * X;
  EmbeddingModel bumped = id;
  bumped.params.values()(bumped.params.layout().segment(latentham::kHamSegment).offset) += 0.1;
  EXPECT_GT(loss_deri(bumped, X, D), 1e-6);
}

TEST(Losses, GradientsMatchFiniteDifferences) {
  Rng rng(6);
  for (Variant v : {Variant::QuadraticSOS, Variant::QuarticSOS, Variant::CubicPoly}) {
    for (int seed = 0; seed < 5; ++seed) {
      EmbeddingModel model = make_model(1, 2, v, {5, 4}, static_cast<std::uint64_t>(seed));
      for (int b = 0; b < 5; ++b) {
        Mat X = random_mat(rng, 2, 6, 1.5);
        Mat D = random_mat(rng, 2, 6, 1.0);
        TrainingConfig cfg;
        for (int term = 0; term < 4; ++term) {
          auto pick = [&](const LossNodes& n) { return term == 0 ? n.encdec : term == 1 ? n.symp : term == 2 ? n.deri : n.total; };
          diffkit::Tape tape;
          diffkit::TapeBinding bind(tape, model.params);
          tape.backward(pick(build_losses(tape, model, bind, X, D, cfg)));
          Vec g = bind.gather_grad();
          Vec fd = fd_gradient(
              [&](const Vec& p) {
                EmbeddingModel q = model;
                q.params.values() = p;
                diffkit::Tape t;
                diffkit::TapeBinding bb(t, q.params, false);
                return pick(build_losses(t, q, bb, X, D, cfg)).scalar();
              },
              model.params.values());
          EXPECT_LT((g - fd).norm() / std::max(1e-8, fd.norm()), 1e-6)
              << latentham::variant_name(v) << " seed " << seed << " batch " << b << " term " << term;
        }
      }
    }
  }
}

TEST(Train, SmokeRunDecreasesAndIsDeterministic) {
  PendulumData data = pendulum_data(0);
  TrainingConfig cfg = preset_config(preset("pendulum"), 0);
  cfg.epochs = 200;
  EmbeddingModel init = make_model(1, 1, Variant::QuarticSOS, {8, 8, 8}, 0);
  TrainResult a = train(data.X, data.D, init, cfg);
  ASSERT_EQ(a.history.size(), 200u);
  EXPECT_LT(a.history.back().total * 10.0, a.history.front().total);
  TrainResult b = train(data.X, data.D, init, cfg);
  EXPECT_EQ(a.model.params.values(), b.model.params.values());
}

TEST(Train, LargeSymplecticWeightEnforcesSymplecticity) {
  PendulumData data = pendulum_data(1);
  TrainingConfig cfg = preset_config(preset("pendulum"), 1);
  cfg.epochs = 600;
  cfg.lambda2 = 100.0;
  TrainResult r = train(data.X, data.D, make_model(1, 1, Variant::QuadraticSOS, {8, 8, 8}, 1), cfg);
  EXPECT_LT(loss_symp(r.model, data.X), 1e-3);
}

TEST(Train, RejectsBadInputs) {
  PendulumData data = pendulum_data(2, 2);
  EmbeddingModel model = make_model(1, 1, Variant::QuadraticSOS, {4}, 0);
  TrainingConfig cfg;
  cfg.epochs = 0;
  EXPECT_THROW(train(data.X, data.D, model, cfg), ValidationError);
  cfg.epochs = 1;
  EXPECT_THROW(train(data.X, Mat(), model, cfg), ValidationError);
  Mat bad = data.X;
  bad(0, 3) = NAN;
  EXPECT_THROW(train(bad, data.D, model, cfg), NumericalError);
}

TEST(Rollout, IdentityModelReproducesRotation) {
  Mat L = half_identity_factor(1);
  L(2, 2) = 1.0;  // H = y'y/2 + 1, so sigma_min(Q) = 1/2
  EmbeddingModel id = linear_model(Mat::Identity(2, 2), Mat::Identity(2, 2), L);
  Vec grid = integrate::uniform_grid(0.0, 10.0, 201);
  RolloutResult r = latent_rollout(id, Vec{{1.0, 0.0}}, grid);
  double worst = 0.0;
  for (Eigen::Index k = 0; k < grid.size(); ++k) {
    const double t = grid(k);
    worst = std::max(worst, (r.predicted.states.col(k) - Vec{{std::cos(t), -std::sin(t)}}).norm());
  }
  EXPECT_LT(worst, 1e-4);  // midpoint phase error over [0, 10] at h = 0.01
  EXPECT_TRUE(r.violations.empty());
  EXPECT_NEAR(r.bound, 3.0, 1e-12);
}

TEST(Rollout, SinglePointIsReconstruction) {
  EmbeddingModel model = make_model(1, 1, Variant::QuarticSOS, {8, 8, 8}, 4);
  Vec x0{{0.5, -0.25}};
  RolloutResult r = latent_rollout(model, x0, Vec::Constant(1, 0.0));
  ASSERT_EQ(r.predicted.size(), 1);
  EXPECT_LT((r.predicted.states.col(0) - model.decode(model.encode(x0)).col(0)).norm(), 1e-15);
}

TEST(Rollout, TrainedModelConservesAndRespectsBound) {
  PendulumData data = pendulum_data(3);
  TrainingConfig cfg = preset_config(preset("pendulum"), 3);
  cfg.epochs = 150;
  for (Variant v : {Variant::QuadraticSOS, Variant::QuarticSOS}) {
    TrainResult r = train(data.X, data.D, make_model(1, 1, v, {8, 8, 8}, 3), cfg);
    auto ham = r.model.latent();
    RolloutResult roll = latent_rollout(r.model, Vec{{1.0, 0.5}}, integrate::uniform_grid(0, 50, 2500));
    EXPECT_TRUE(roll.violations.empty());
    const double h0 = latentham::latent_h(ham, roll.latent.states.col(0));
    double drift = 0.0;
    for (Eigen::Index k = 0; k < roll.latent.size(); ++k)
      drift = std::max(drift, std::abs(latentham::latent_h(ham, roll.latent.states.col(k)) - h0) / h0);
    EXPECT_LT(drift, 1e-6) << latentham::variant_name(v);
  }
}

TEST(Presets, TableValues) {
  EXPECT_EQ(preset("pendulum").hidden, (std::vector<int>{8, 8, 8}));
  EXPECT_EQ(preset("lotka-volterra").batch_size, 64);
  EXPECT_EQ(preset("lotka-volterra").wd_hamiltonian, 1e-4);
  EXPECT_EQ(preset("nls").wd_hamiltonian, 1e-3);
  EXPECT_EQ(preset("wave").latent_dim, 6);
  EXPECT_EQ(preset("nls").hidden, (std::vector<int>{12, 12, 12}));
  EXPECT_THROW(preset("duffing"), ValidationError);
  TrainingConfig cfg = preset_config(preset("pendulum"), 0);
  EXPECT_EQ(cfg.epochs, 4000);
  EXPECT_EQ(cfg.base_lr, 3e-3);
  EXPECT_EQ(cfg.step_epochs, 1000);
}
