#include <cmath>
#include <limits>
#include <numeric>

#include "hamembed/diffkit/optim.hpp"
#include "hamembed/errors.hpp"
#include "hamembed/training.hpp"

namespace hamembed::training {

using diffkit::Var;

namespace {

diffkit::MLPSpec encoder_spec(int n, int m, const std::vector<int>& hidden) { return {2 * n, 2 * m, hidden}; }

diffkit::MLPSpec decoder_spec(int n, int m, const std::vector<int>& hidden) {
  return {2 * m, 2 * n, std::vector<int>(hidden.rbegin(), hidden.rend())};
}

}  // namespace

void EmbeddingModel::validate() const {
  if (n < 1 || m < 1) throw ValidationError("model dimensions n and m must be positive");
  if (m < n) throw ValidationError("symplectic lifting needs m >= n (got n=" + std::to_string(n) + ", m=" + std::to_string(m) + ")");
  if (encoder.in_dim != 2 * n || encoder.out_dim != 2 * m || decoder.in_dim != 2 * m || decoder.out_dim != 2 * n)
    throw ValidationError("encoder/decoder widths do not match (n, m)");
  encoder.validate();
  decoder.validate();
  if (params.size() != encoder.param_count() + decoder.param_count() + latentham::latent_param_count(variant, m))
    throw ValidationError("parameter vector does not match the architecture");
}

Mat EmbeddingModel::encode(const Mat& X) const {
  return diffkit::mlp_forward_batch(encoder, diffkit::MlpWeights::from(params, encoder, kEncoder), X);
}

Mat EmbeddingModel::decode(const Mat& Y) const {
  return diffkit::mlp_forward_batch(decoder, diffkit::MlpWeights::from(params, decoder, kDecoder), Y);
}

latentham::LatentHamiltonian EmbeddingModel::latent() const {
  return latentham::latent_from_params(params, variant, m, eps, w);
}

diffkit::ParamLayout model_layout(int n, int m, Variant v, const std::vector<int>& hidden) {
  diffkit::ParamLayout layout;
  diffkit::add_mlp_segments(layout, encoder_spec(n, m, hidden), kEncoder, diffkit::ParamGroup::Autoencoder);
  diffkit::add_mlp_segments(layout, decoder_spec(n, m, hidden), kDecoder, diffkit::ParamGroup::Autoencoder);
  latentham::add_latent_segment(layout, v, m);
  return layout;
}

EmbeddingModel make_model(int n, int m, Variant v, const std::vector<int>& hidden, std::uint64_t seed,
                          LatentInit init) {
  EmbeddingModel model;
  model.n = n;
  model.m = m;
  model.variant = v;
  model.encoder = encoder_spec(n, m, hidden);
  model.decoder = decoder_spec(n, m, hidden);
  if (n < 1 || m < 1) throw ValidationError("model dimensions n and m must be positive");
  model.params = diffkit::ParamVector(model_layout(n, m, v, hidden));
  Rng rng(seed);
  diffkit::init_mlp_glorot(model.params, model.encoder, kEncoder, rng);
  diffkit::init_mlp_glorot(model.params, model.decoder, kDecoder, rng);
  latentham::init_latent(model.params, v, m, rng, init.diag_scale, init.jitter);
  model.validate();
  return model;
}

void TrainingConfig::validate() const {
  if (lambda1 < 0 || lambda2 < 0 || lambda3 < 0) throw ValidationError("loss weights must be non-negative");
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (!(base_lr > 0)) throw ValidationError("base_lr must be positive");
  if (!(gamma > 0)) throw ValidationError("gamma must be positive");
  if (step_epochs < 1) throw ValidationError("step_epochs must be >= 1");
  if (wd_autoencoder < 0 || wd_hamiltonian < 0 || l1 < 0) throw ValidationError("regularization weights must be non-negative");
}

namespace {

// Mean over samples and entries of (Dphi' J_2m Dphi - J_2n)^2, with Dphi given
// in block layout (2m x 2n*B, block j = column j of every sample's Jacobian).
Var symplectic_residual(diffkit::Tape& tape, Var jac, int n, int m, Eigen::Index batch) {
  const int in = 2 * n;
  Var jjac = matmul(tape.constant(symplectic_form(m)), jac);
  Var ones = tape.constant(Mat::Ones(1, 2 * m));
  const Mat J2n = symplectic_form(n);
  Var acc;
  for (int i = 0; i < in; ++i) {
    Var block = diffkit::cols(jac, i * batch, batch);
    Var row = matmul(ones, hadamard(diffkit::tile_h(block, in), jjac));  // entries (i, j) for all j, s
    Mat target(1, in * batch);
    for (int j = 0; j < in; ++j) target.middleCols(j * batch, batch).setConstant(J2n(i, j));
    Var term = sum(square(row - tape.constant(target)));
    acc = i == 0 ? term : acc + term;
  }
  return (1.0 / static_cast<double>(in * in * batch)) * acc;
}

void check_batch(const EmbeddingModel& model, const Mat& X, const Mat& Xdot) {
  if (X.cols() == 0) throw ValidationError("empty batch");
  if (X.rows() != 2 * model.n) throw ValidationError("batch rows must equal 2n = " + std::to_string(2 * model.n));
  if (Xdot.size() > 0 && (Xdot.rows() != X.rows() || Xdot.cols() != X.cols()))
    throw ValidationError("derivative batch does not match the state batch");
}

}  // namespace

LossNodes build_losses(diffkit::Tape& tape, const EmbeddingModel& model, const diffkit::TapeBinding& binding,
                       const Mat& X, const Mat& Xdot, const TrainingConfig& cfg) {
  model.validate();
  check_batch(model, X, Xdot);
  const auto enc = diffkit::MlpVars::from(binding, model.encoder, kEncoder);
  const auto dec = diffkit::MlpVars::from(binding, model.decoder, kDecoder);
  Var x = tape.constant(X);
  diffkit::MlpTrace etrace = diffkit::mlp_trace(model.encoder, enc, x);
  Var y = etrace.output;
  diffkit::MlpTrace dtrace = diffkit::mlp_trace(model.decoder, dec, y);

  LossNodes out;
  out.encdec = mean(square(dtrace.output - x));
  out.symp = symplectic_residual(tape, diffkit::mlp_jacobian(model.encoder, enc, etrace), model.n, model.m, X.cols());
  Var theta = binding[latentham::kHamSegment];
  if (Xdot.size() > 0) {
    Var ydot = diffkit::mlp_jvp(model.encoder, enc, etrace, tape.constant(Xdot));
    Var field = matmul(tape.constant(symplectic_form(model.m)),
                       latentham::latent_grad_tape(model.variant, model.m, theta, y, model.eps, model.w));
    out.deri = mean(square(ydot - field));
  } else {
    out.deri = tape.constant(Mat::Zero(1, 1));
  }
  out.l1 = cfg.l1 * sum(abs(theta));
  out.total = cfg.lambda1 * out.encdec + cfg.lambda2 * out.symp + cfg.lambda3 * out.deri + out.l1;
  return out;
}

namespace {

LossNodes evaluate(diffkit::Tape& tape, const EmbeddingModel& model, const Mat& X, const Mat& Xdot,
                   const TrainingConfig& cfg, bool differentiable) {
  diffkit::TapeBinding binding(tape, model.params, differentiable);
  return build_losses(tape, model, binding, X, Xdot, cfg);
}

}  // namespace

double loss_encdec(const EmbeddingModel& model, const Mat& X) {
  diffkit::Tape tape;
  return evaluate(tape, model, X, Mat(), TrainingConfig{}, false).encdec.scalar();
}

double loss_symp(const EmbeddingModel& model, const Mat& X) {
  diffkit::Tape tape;
  return evaluate(tape, model, X, Mat(), TrainingConfig{}, false).symp.scalar();
}

double loss_deri(const EmbeddingModel& model, const Mat& X, const Mat& Xdot) {
  if (Xdot.size() == 0) throw ValidationError("loss_deri needs time derivatives for every sample");
  diffkit::Tape tape;
  return evaluate(tape, model, X, Xdot, TrainingConfig{}, false).deri.scalar();
}

double total_loss(const EmbeddingModel& model, const Mat& X, const Mat& Xdot, const TrainingConfig& cfg) {
  if (Xdot.size() == 0) throw ValidationError("total_loss needs time derivatives for every sample");
  diffkit::Tape tape;
  return evaluate(tape, model, X, Xdot, cfg, false).total.scalar();
}

Vec total_loss_gradient(const EmbeddingModel& model, const Mat& X, const Mat& Xdot, const TrainingConfig& cfg) {
  diffkit::Tape tape;
  diffkit::TapeBinding binding(tape, model.params);
  LossNodes nodes = build_losses(tape, model, binding, X, Xdot, cfg);
  tape.backward(nodes.total);
  return binding.gather_grad();
}

TrainResult train(const Mat& X, const Mat& Xdot, EmbeddingModel model, const TrainingConfig& cfg,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  model.validate();
  if (Xdot.size() == 0) throw ValidationError("training data has no time derivatives");
  check_batch(model, X, Xdot);

  const Eigen::Index count = X.cols();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(count));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Rng rng(cfg.seed);
  diffkit::Adam adam(model.params.size());
  const Vec decay = diffkit::weight_decay_vector(model.params.layout(), cfg.wd_autoencoder, cfg.wd_hamiltonian);

  TrainResult result;
  result.history.reserve(static_cast<std::size_t>(cfg.epochs));
  Mat xb, db;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = diffkit::lr_schedule(epoch, cfg.base_lr, cfg.gamma, cfg.step_epochs);
    rng.shuffle(order);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    int batch_index = 0;
    for (Eigen::Index start = 0; start < count; start += cfg.batch_size, ++batch_index) {
      const Eigen::Index size = std::min<Eigen::Index>(cfg.batch_size, count - start);
      xb.resize(X.rows(), size);
      db.resize(X.rows(), size);
      for (Eigen::Index s = 0; s < size; ++s) {
        xb.col(s) = X.col(order[static_cast<std::size_t>(start + s)]);
        db.col(s) = Xdot.col(order[static_cast<std::size_t>(start + s)]);
      }
      diffkit::Tape tape;
      diffkit::TapeBinding binding(tape, model.params);
      LossNodes nodes = build_losses(tape, model, binding, xb, db, cfg);
      const double total = nodes.total.scalar();
      if (!std::isfinite(total))
        throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch_index));
      tape.backward(nodes.total);
      adam.step(model.params.values(), binding.gather_grad(), lr, decay,
                "epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch_index));
      const double wgt = static_cast<double>(size) / static_cast<double>(count);
      rec.total += wgt * total;
      rec.encdec += wgt * nodes.encdec.scalar();
      rec.symp += wgt * nodes.symp.scalar();
      rec.deri += wgt * nodes.deri.scalar();
      rec.l1 += wgt * nodes.l1.scalar();
    }
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  result.model = std::move(model);
  return result;
}

RolloutResult latent_rollout(const EmbeddingModel& model, const Vec& x0, const Vec& t_grid,
                             const integrate::SolverConfig& cfg, double max_step) {
  model.validate();
  if (x0.size() != 2 * model.n) throw ValidationError("initial state has the wrong dimension");
  const latentham::LatentHamiltonian ham = model.latent();
  const Vec y0 = model.encode(x0).col(0);

  RolloutResult out;
  out.latent = integrate::integrate_field([&](const Vec& y) { return latentham::latent_vector_field(ham, y); }, y0,
                                          t_grid, cfg, max_step);
  out.predicted.times = out.latent.times;
  out.predicted.states = model.decode(out.latent.states);
  out.predicted.ic_id = out.latent.ic_id;

  if (const auto* sos = std::get_if<latentham::SosHamiltonian>(&ham)) {
    out.bound = latentham::stability_bound(ham, y0);
    for (Eigen::Index k = 0; k < out.latent.size(); ++k) {
      const double c = latentham::certified_quantity(*sos, out.latent.states.col(k));
      out.max_certified = std::max(out.max_certified, c);
      if (c > out.bound * (1.0 + kBoundSlack)) out.violations.push_back({k, out.latent.times(k), c});
    }
  } else {
    out.bound = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

const std::vector<Preset>& presets() {
  static const std::vector<Preset> table = {
      {"pendulum", {8, 8, 8}, 2, 32, 1e-5, 1e-5},
      {"oscillator", {8, 8, 8}, 2, 32, 1e-5, 1e-5},
      {"lotka-volterra", {8, 8, 8}, 4, 64, 1e-5, 1e-4},
      {"nls", {12, 12, 12}, 4, 32, 1e-5, 1e-3},
      {"wave", {12, 12, 12}, 6, 32, 1e-5, 1e-5},
  };
  return table;
}

const Preset& preset(const std::string& name) {
  for (const Preset& p : presets())
    if (p.name == name) return p;
  throw ValidationError("unknown preset '" + name + "'");
}

TrainingConfig preset_config(const Preset& p, std::uint64_t seed) {
  TrainingConfig cfg;
  cfg.batch_size = p.batch_size;
  cfg.wd_autoencoder = p.wd_autoencoder;
  cfg.wd_hamiltonian = p.wd_hamiltonian;
  cfg.seed = seed;
  return cfg;
}

}  // namespace hamembed::training
