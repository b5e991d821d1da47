#include <cmath>
#include <string>

#include "hamembed/diffkit/mlp.hpp"
#include "hamembed/errors.hpp"

namespace hamembed::diffkit {

int MLPSpec::fan_in(int layer) const { return layer == 0 ? in_dim : hidden[static_cast<std::size_t>(layer - 1)]; }

int MLPSpec::fan_out(int layer) const {
  return layer == layers() - 1 ? out_dim : hidden[static_cast<std::size_t>(layer)];
}

Eigen::Index MLPSpec::param_count() const {
  Eigen::Index n = 0;
  for (int k = 0; k < layers(); ++k) n += static_cast<Eigen::Index>(fan_in(k) + 1) * fan_out(k);
  return n;
}

void MLPSpec::validate() const {
  if (in_dim < 1 || out_dim < 1) throw ValidationError("MLP input and output widths must be positive");
  for (int h : hidden)
    if (h < 1) throw ValidationError("MLP hidden widths must be positive");
}

std::string weight_name(const std::string& prefix, int layer) { return prefix + ".W" + std::to_string(layer); }
std::string bias_name(const std::string& prefix, int layer) { return prefix + ".b" + std::to_string(layer); }

void add_mlp_segments(ParamLayout& layout, const MLPSpec& spec, const std::string& prefix, ParamGroup group) {
  spec.validate();
  for (int k = 0; k < spec.layers(); ++k) {
    layout.add(weight_name(prefix, k), spec.fan_out(k), spec.fan_in(k), group);
    layout.add(bias_name(prefix, k), spec.fan_out(k), 1, group);
  }
}

void init_mlp_glorot(ParamVector& params, const MLPSpec& spec, const std::string& prefix, Rng& rng) {
  for (int k = 0; k < spec.layers(); ++k) {
    const int fi = spec.fan_in(k);
    const int fo = spec.fan_out(k);
    const double limit = std::sqrt(6.0 / (fi + fo));
    Mat W(fo, fi);
    for (Eigen::Index c = 0; c < W.cols(); ++c)
      for (Eigen::Index r = 0; r < W.rows(); ++r) W(r, c) = rng.uniform(-limit, limit);
    params.set(weight_name(prefix, k), W);
    params.set(bias_name(prefix, k), Mat::Zero(fo, 1));
  }
}

MlpWeights MlpWeights::from(const ParamVector& params, const MLPSpec& spec, const std::string& prefix) {
  MlpWeights w;
  for (int k = 0; k < spec.layers(); ++k) {
    w.W.push_back(params.get(weight_name(prefix, k)));
    w.b.push_back(params.get(bias_name(prefix, k)).col(0));
  }
  return w;
}

namespace {

void check_input(const MLPSpec& spec, Eigen::Index rows, const char* what) {
  if (rows != spec.in_dim)
    throw ValidationError(std::string(what) + ": expected input of dimension " + std::to_string(spec.in_dim) + ", got " +
                          std::to_string(rows));
}

}  // namespace

Mat mlp_forward_batch(const MLPSpec& spec, const MlpWeights& w, const Mat& X) {
  check_input(spec, X.rows(), "mlp_forward");
  Mat a = X;
  for (int k = 0; k < spec.layers(); ++k) {
    Mat z = w.W[k] * a;
    z.colwise() += w.b[k];
    a = k + 1 < spec.layers() ? z.unaryExpr([](double v) { return selu_value(v); }).eval() : z;
  }
  return a;
}

Vec mlp_forward(const MLPSpec& spec, const MlpWeights& w, const Vec& x) { return mlp_forward_batch(spec, w, x).col(0); }

Mat mlp_input_jacobian(const MLPSpec& spec, const MlpWeights& w, const Vec& x) {
  check_input(spec, x.size(), "mlp_input_jacobian");
  Vec a = x;
  Mat jac = Mat::Identity(spec.in_dim, spec.in_dim);
  for (int k = 0; k < spec.layers(); ++k) {
    Vec z = w.W[k] * a + w.b[k];
    jac = w.W[k] * jac;
    if (k + 1 < spec.layers()) {
      for (Eigen::Index i = 0; i < z.size(); ++i) jac.row(i) *= selu_derivative(z(i));
      a = z.unaryExpr([](double v) { return selu_value(v); });
    }
  }
  return jac;
}

Vec mlp_input_jvp(const MLPSpec& spec, const MlpWeights& w, const Vec& x, const Vec& v) {
  check_input(spec, x.size(), "mlp_input_jvp");
  check_input(spec, v.size(), "mlp_input_jvp");
  Vec a = x;
  Vec t = v;
  for (int k = 0; k < spec.layers(); ++k) {
    Vec z = w.W[k] * a + w.b[k];
    t = w.W[k] * t;
    if (k + 1 < spec.layers()) {
      t = t.cwiseProduct(z.unaryExpr([](double s) { return selu_derivative(s); }));
      a = z.unaryExpr([](double s) { return selu_value(s); });
    }
  }
  return t;
}

MlpVars MlpVars::from(const TapeBinding& binding, const MLPSpec& spec, const std::string& prefix) {
  MlpVars v;
  for (int k = 0; k < spec.layers(); ++k) {
    v.W.push_back(binding[weight_name(prefix, k)]);
    v.b.push_back(binding[bias_name(prefix, k)]);
  }
  return v;
}

MlpTrace mlp_trace(const MLPSpec& spec, const MlpVars& vars, Var X) {
  check_input(spec, X.rows(), "mlp_trace");
  MlpTrace trace;
  trace.batch = X.cols();
  Var a = X;
  for (int k = 0; k < spec.layers(); ++k) {
    Var z = add_columnwise(matmul(vars.W[k], a), vars.b[k]);
    if (k + 1 < spec.layers()) {
      trace.slope.push_back(selu_prime(z));
      a = selu(z);
    } else {
      a = z;
    }
  }
  trace.output = a;
  return trace;
}

Var mlp_jvp(const MLPSpec& spec, const MlpVars& vars, const MlpTrace& trace, Var T) {
  check_input(spec, T.rows(), "mlp_jvp");
  if (trace.batch == 0 || T.cols() % trace.batch != 0)
    throw ValidationError("mlp_jvp: tangent columns must be a multiple of the batch size");
  const int k_blocks = static_cast<int>(T.cols() / trace.batch);
  Var t = T;
  for (int k = 0; k < spec.layers(); ++k) {
    t = matmul(vars.W[k], t);
    if (k + 1 < spec.layers()) {
      Var s = trace.slope[static_cast<std::size_t>(k)];
      t = hadamard(k_blocks == 1 ? s : tile_h(s, k_blocks), t);
    }
  }
  return t;
}

Var mlp_jacobian(const MLPSpec& spec, const MlpVars& vars, const MlpTrace& trace) {
  const Eigen::Index B = trace.batch;
  Mat seed = Mat::Zero(spec.in_dim, spec.in_dim * B);
  for (int j = 0; j < spec.in_dim; ++j) seed.block(j, j * B, 1, B).setOnes();
  return mlp_jvp(spec, vars, trace, trace.output.tape()->constant(std::move(seed)));
}

}  // namespace hamembed::diffkit
