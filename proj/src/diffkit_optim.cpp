#include <cmath>
#include <string>

#include "hamembed/diffkit/optim.hpp"
#include "hamembed/errors.hpp"

namespace hamembed::diffkit {

Adam::Adam(Eigen::Index size, AdamConfig cfg) : cfg_(cfg) {
  state_.m = Vec::Zero(size);
  state_.v = Vec::Zero(size);
}

void Adam::step(Vec& params, const Vec& grads, double lr, const Vec& weight_decay, const std::string& where) {
  const Eigen::Index n = state_.m.size();
  if (params.size() != n || grads.size() != n || weight_decay.size() != n)
    throw ValidationError("adam_step: parameter, gradient and decay sizes must match the optimizer state");
  for (Eigen::Index i = 0; i < n; ++i)
    if (!std::isfinite(grads(i)))
      throw NumericalError((where.empty() ? std::string() : where + ": ") + "non-finite gradient at coordinate " +
                           std::to_string(i));

  ++state_.step;
  state_.lr = lr;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(state_.step));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(state_.step));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double g = grads(i);
    state_.m(i) = cfg_.beta1 * state_.m(i) + (1.0 - cfg_.beta1) * g;
    state_.v(i) = cfg_.beta2 * state_.v(i) + (1.0 - cfg_.beta2) * g * g;
    const double mhat = state_.m(i) / c1;
    const double vhat = state_.v(i) / c2;
    params(i) *= 1.0 - lr * weight_decay(i);
    params(i) -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
  }
}

double lr_schedule(int epoch, double base_lr, double gamma, int step_epochs) {
  if (epoch < 0) throw ValidationError("lr_schedule: epoch must be non-negative");
  if (step_epochs < 1) throw ValidationError("lr_schedule: step interval must be positive");
  return base_lr * std::pow(gamma, epoch / step_epochs);
}

Vec weight_decay_vector(const ParamLayout& layout, double wd_autoencoder, double wd_hamiltonian) {
  Vec wd(layout.total());
  for (const Segment& s : layout.segments())
    wd.segment(s.offset, s.size()).setConstant(s.group == ParamGroup::Hamiltonian ? wd_hamiltonian : wd_autoencoder);
  return wd;
}

}  // namespace hamembed::diffkit
