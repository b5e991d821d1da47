#include <cmath>
#include <numeric>

#include "hamembed/decoders.hpp"
#include "hamembed/diffkit/optim.hpp"
#include "hamembed/diffkit/tape.hpp"
#include "hamembed/errors.hpp"
#include "hamembed/random.hpp"

namespace hamembed::decoders {

using diffkit::Var;

Mat linear_reconstruct(const pod::PODBasis& basis, const Mat& Y) { return pod::lift(basis, Y); }

namespace {

Mat kron_square(const Mat& Y) {
  const Eigen::Index d = Y.rows();
  Mat out(d * d, Y.cols());
  for (Eigen::Index c = 0; c < Y.cols(); ++c)
    for (Eigen::Index i = 0; i < d; ++i) out.block(i * d, c, d, 1) = Y(i, c) * Y.col(c);
  return out;
}

}  // namespace

Mat quad_reconstruct_batch(const QuadDecoder& dec, const Mat& Y) {
  const Eigen::Index d = dec.V.cols();
  if (Y.rows() != d) throw ValidationError("quad_reconstruct: coordinate dimension must be " + std::to_string(d));
  if (dec.H.rows() != dec.V.rows() || dec.H.cols() != d * d) throw ValidationError("quad_reconstruct: malformed decoder");
  return dec.V * Y + dec.H * kron_square(Y);
}

Vec quad_reconstruct(const QuadDecoder& dec, const Vec& y) { return quad_reconstruct_batch(dec, y).col(0); }

void QuadFitConfig::validate() const {
  if (epochs < 1 || batch_size < 1 || step_epochs < 1) throw ValidationError("decoder fit: epochs, batch_size, step_epochs must be >= 1");
  if (!(base_lr > 0) || !(gamma > 0) || weight_decay < 0) throw ValidationError("decoder fit: invalid learning-rate settings");
}

QuadFitResult fit_quad_decoder(const Mat& Y, const Mat& X, const QuadFitConfig& cfg) {
  cfg.validate();
  if (Y.cols() != X.cols() || Y.cols() == 0) throw ValidationError("fit_quad_decoder: need matching, non-empty sample sets");
  if (!Y.allFinite() || !X.allFinite()) throw NumericalError("fit_quad_decoder: non-finite training data");
  const Eigen::Index d = Y.rows();
  const Eigen::Index nf = X.rows();
  const Eigen::Index count = Y.cols();
  const Mat features = [&] {
    Mat f(d + d * d, count);
    f.topRows(d) = Y;
    f.bottomRows(d * d) = kron_square(Y);
    return f;
  }();

  QuadFitResult result;
  result.underdetermined = count < d * (d + 1) / 2 + d;
  Mat W = Mat::Zero(nf, d + d * d);
  diffkit::Adam adam(W.size());
  const Vec decay = Vec::Constant(W.size(), cfg.weight_decay);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(count));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Rng rng(cfg.seed);
  Mat fb, xb;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = diffkit::lr_schedule(epoch, cfg.base_lr, cfg.gamma, cfg.step_epochs);
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (Eigen::Index start = 0; start < count; start += cfg.batch_size) {
      const Eigen::Index size = std::min<Eigen::Index>(cfg.batch_size, count - start);
      fb.resize(features.rows(), size);
      xb.resize(nf, size);
      for (Eigen::Index s = 0; s < size; ++s) {
        fb.col(s) = features.col(order[static_cast<std::size_t>(start + s)]);
        xb.col(s) = X.col(order[static_cast<std::size_t>(start + s)]);
      }
      diffkit::Tape tape;
      Var w = tape.parameter(W);
      Var resid = tape.constant(xb) - matmul(w, tape.constant(fb));
      Var loss = 0.5 * mean(square(resid)) + 0.5 * mean(abs(resid));
      const double value = loss.scalar();
      if (!std::isfinite(value)) throw NumericalError("decoder fit: non-finite loss at epoch " + std::to_string(epoch));
      tape.backward(loss);
      Vec params = W.reshaped();
      adam.step(params, tape.grad(w).reshaped(), lr, decay, "decoder fit epoch " + std::to_string(epoch));
      W = params.reshaped(nf, d + d * d);
      epoch_loss += value * static_cast<double>(size) / static_cast<double>(count);
    }
    result.history.push_back(epoch_loss);
  }
  result.decoder.V = W.leftCols(d);
  result.decoder.H = W.rightCols(d * d);
  return result;
}

}  // namespace hamembed::decoders
