#pragma once

#include <string>
#include <vector>

#include "hamembed/diffkit/params.hpp"
#include "hamembed/diffkit/tape.hpp"
#include "hamembed/random.hpp"

namespace hamembed::diffkit {

/// Affine-SeLU stack: SeLU on hidden layers, identity on the output.
struct MLPSpec {
  int in_dim = 0;
  int out_dim = 0;
  std::vector<int> hidden;

  int layers() const { return static_cast<int>(hidden.size()) + 1; }
  int fan_in(int layer) const;
  int fan_out(int layer) const;
  Eigen::Index param_count() const;
  void validate() const;
};

std::string weight_name(const std::string& prefix, int layer);
std::string bias_name(const std::string& prefix, int layer);

void add_mlp_segments(ParamLayout& layout, const MLPSpec& spec, const std::string& prefix, ParamGroup group);
/// Glorot-uniform weights, zero biases.
void init_mlp_glorot(ParamVector& params, const MLPSpec& spec, const std::string& prefix, Rng& rng);

struct MlpWeights {
  std::vector<Mat> W;
  std::vector<Vec> b;

  static MlpWeights from(const ParamVector& params, const MLPSpec& spec, const std::string& prefix);
};

Vec mlp_forward(const MLPSpec& spec, const MlpWeights& w, const Vec& x);
/// Column-wise forward pass over a batch.
Mat mlp_forward_batch(const MLPSpec& spec, const MlpWeights& w, const Mat& X);
Mat mlp_input_jacobian(const MLPSpec& spec, const MlpWeights& w, const Vec& x);
Vec mlp_input_jvp(const MLPSpec& spec, const MlpWeights& w, const Vec& x, const Vec& v);

struct MlpVars {
  std::vector<Var> W;
  std::vector<Var> b;

  static MlpVars from(const TapeBinding& binding, const MLPSpec& spec, const std::string& prefix);
};

/// Recorded forward pass over a batch X (in_dim x B), keeping the activation
/// slopes so that tangents can be pushed through afterwards.
struct MlpTrace {
  std::vector<Var> slope;
  Var output;
  Eigen::Index batch = 0;
};

MlpTrace mlp_trace(const MLPSpec& spec, const MlpVars& vars, Var X);

/// Pushes tangents through a recorded pass. T is in_dim x (k*B): k blocks of
/// B columns, column s of each block belonging to sample s. Returns out_dim x (k*B).
Var mlp_jvp(const MLPSpec& spec, const MlpVars& vars, const MlpTrace& trace, Var T);

/// Input Jacobians of the whole batch, out_dim x (in_dim*B); block j holds
/// column j of every sample's Jacobian.
Var mlp_jacobian(const MLPSpec& spec, const MlpVars& vars, const MlpTrace& trace);

}  // namespace hamembed::diffkit
