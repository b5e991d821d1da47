#pragma once

#include <string>

#include "hamembed/diffkit/params.hpp"
#include "hamembed/linalg.hpp"

namespace hamembed::diffkit {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct OptimizerState {
  Vec m;
  Vec v;
  long step = 0;
  double lr = 0.0;
};

/// Bias-corrected Adam with decoupled, per-coordinate weight decay.
class Adam {
 public:
  explicit Adam(Eigen::Index size, AdamConfig cfg = {});

  /// `where` is prepended to the error raised on non-finite gradients.
  void step(Vec& params, const Vec& grads, double lr, const Vec& weight_decay, const std::string& where = "");

  const OptimizerState& state() const { return state_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  OptimizerState state_;
};

/// base_lr * gamma^floor(epoch / step_epochs)
double lr_schedule(int epoch, double base_lr, double gamma, int step_epochs);

/// Per-coordinate decay coefficients from the segment groups.
Vec weight_decay_vector(const ParamLayout& layout, double wd_autoencoder, double wd_hamiltonian);

}  // namespace hamembed::diffkit
