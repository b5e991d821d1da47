#include <cmath>
#include <string>

#include "hamembed/diffkit/tape.hpp"
#include "hamembed/errors.hpp"

namespace hamembed::diffkit {

double selu_value(double x) { return x >= 0.0 ? kSeluLambda * x : kSeluLambda * kSeluAlpha * std::expm1(x); }
double selu_derivative(double x) { return x >= 0.0 ? kSeluLambda : kSeluLambda * kSeluAlpha * std::exp(x); }
double selu_second_derivative(double x) { return x >= 0.0 ? 0.0 : kSeluLambda * kSeluAlpha * std::exp(x); }

const Mat& Var::value() const { return tape_->node(id_).value; }

double Var::scalar() const {
  const Mat& v = value();
  if (v.rows() != 1 || v.cols() != 1) throw ValidationError("Var::scalar on a non-scalar node");
  return v(0, 0);
}

Var Tape::record(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::parameter(Mat value) {
  Node n;
  n.requires_grad = true;
  n.value = std::move(value);
  return record(std::move(n));
}

Var Tape::constant(Mat value) {
  Node n;
  n.value = std::move(value);
  return record(std::move(n));
}

void Tape::accumulate(int id, const Mat& contribution) {
  if (!nodes_[id].requires_grad) return;
  Mat& adj = adjoints_[id];
  if (adj.size() == 0)
    adj = contribution;
  else
    adj += contribution;
}

void Tape::accumulate_block(int id, Eigen::Index r0, Eigen::Index c0, const Mat& contribution) {
  if (!nodes_[id].requires_grad) return;
  Mat& adj = adjoints_[id];
  if (adj.size() == 0) adj = Mat::Zero(nodes_[id].value.rows(), nodes_[id].value.cols());
  adj.block(r0, c0, contribution.rows(), contribution.cols()) += contribution;
}

Mat Tape::grad(Var v) const {
  const Node& n = node(v.id());
  if (static_cast<std::size_t>(v.id()) < adjoints_.size() && adjoints_[v.id()].size() > 0) return adjoints_[v.id()];
  return Mat::Zero(n.value.rows(), n.value.cols());
}

void Tape::backward(Var root) {
  if (root.tape() != this) throw ValidationError("backward: root belongs to another tape");
  const Node& r = node(root.id());
  if (r.value.rows() != 1 || r.value.cols() != 1) throw ValidationError("backward: root must be a scalar (1x1) node");
  adjoints_.assign(nodes_.size(), Mat());
  adjoints_[root.id()] = Mat::Ones(1, 1);

  for (int i = root.id(); i >= 0; --i) {
    const Node& n = nodes_[i];
    if (!n.requires_grad || n.op == Op::Leaf) continue;
    const Mat g = adjoints_[i];
    if (g.size() == 0) continue;
    const auto& av = n.a >= 0 ? nodes_[n.a].value : n.value;
    switch (n.op) {
      case Op::Leaf:
        break;
      case Op::Add:
        accumulate(n.a, g);
        accumulate(n.b, g);
        break;
      case Op::Sub:
        accumulate(n.a, g);
        accumulate(n.b, -g);
        break;
      case Op::Neg:
        accumulate(n.a, -g);
        break;
      case Op::Scale:
        accumulate(n.a, n.c * g);
        break;
      case Op::Hadamard:
        accumulate(n.a, g.cwiseProduct(nodes_[n.b].value));
        accumulate(n.b, g.cwiseProduct(av));
        break;
      case Op::MatMul:
        if (nodes_[n.a].requires_grad) accumulate(n.a, g * nodes_[n.b].value.transpose());
        if (nodes_[n.b].requires_grad) accumulate(n.b, av.transpose() * g);
        break;
      case Op::Transpose:
        accumulate(n.a, g.transpose());
        break;
      case Op::AddColumn:
        accumulate(n.a, g);
        accumulate(n.b, g.rowwise().sum());
        break;
      case Op::Selu:
        accumulate(n.a, g.cwiseProduct(av.unaryExpr([](double x) { return selu_derivative(x); })));
        break;
      case Op::SeluPrime:
        accumulate(n.a, g.cwiseProduct(av.unaryExpr([](double x) { return selu_second_derivative(x); })));
        break;
      case Op::Abs:
        accumulate(n.a, g.cwiseProduct(av.unaryExpr([](double x) { return double((x > 0.0) - (x < 0.0)); })));
        break;
      case Op::Sum:
        accumulate(n.a, Mat::Constant(av.rows(), av.cols(), g(0, 0)));
        break;
      case Op::RowSlice:
        accumulate_block(n.a, n.i0, 0, g);
        break;
      case Op::ColSlice:
        accumulate_block(n.a, 0, n.i0, g);
        break;
      case Op::VCat: {
        Eigen::Index r0 = 0;
        for (int arg : n.args) {
          const Eigen::Index h = nodes_[arg].value.rows();
          accumulate(arg, g.middleRows(r0, h));
          r0 += h;
        }
        break;
      }
      case Op::HCat: {
        Eigen::Index c0 = 0;
        for (int arg : n.args) {
          const Eigen::Index w = nodes_[arg].value.cols();
          accumulate(arg, g.middleCols(c0, w));
          c0 += w;
        }
        break;
      }
      case Op::TileH: {
        const Eigen::Index w = av.cols();
        Mat acc = g.middleCols(0, w);
        for (Eigen::Index k = 1; k < n.i0; ++k) acc += g.middleCols(k * w, w);
        accumulate(n.a, acc);
        break;
      }
      case Op::LowerTri: {
        const Eigen::Index k = n.i0;
        Mat acc(av.rows(), 1);
        Eigen::Index idx = 0;
        for (Eigen::Index r = 0; r < k; ++r)
          for (Eigen::Index c = 0; c <= r; ++c) acc(idx++, 0) = g(r, c);
        accumulate(n.a, acc);
        break;
      }
      case Op::Reshape:
        accumulate(n.a, g.reshaped(av.rows(), av.cols()));
        break;
      case Op::KronCols: {
        const Mat& bv = nodes_[n.b].value;
        const Eigen::Index p = av.rows();
        const Eigen::Index q = bv.rows();
        Mat ga = Mat::Zero(p, av.cols());
        Mat gb = Mat::Zero(q, bv.cols());
        for (Eigen::Index col = 0; col < av.cols(); ++col)
          for (Eigen::Index i = 0; i < p; ++i)
            for (Eigen::Index j = 0; j < q; ++j) {
              const double gij = g(i * q + j, col);
              ga(i, col) += gij * bv(j, col);
              gb(j, col) += gij * av(i, col);
            }
        accumulate(n.a, ga);
        accumulate(n.b, gb);
        break;
      }
      case Op::ScaleBy: {
        const double s = nodes_[n.b].value(0, 0);
        accumulate(n.a, s * g);
        if (nodes_[n.b].requires_grad) accumulate(n.b, Mat::Constant(1, 1, g.cwiseProduct(av).sum()));
        break;
      }
    }
  }
}

namespace {

Tape& same_tape(Var a, Var b, const char* op) {
  if (!a.valid() || a.tape() != b.tape()) throw ValidationError(std::string(op) + ": operands live on different tapes");
  return *a.tape();
}

Tape& tape_of(Var a, const char* op) {
  if (!a.valid()) throw ValidationError(std::string(op) + ": invalid variable");
  return *a.tape();
}

void require_same_shape(Var a, Var b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ValidationError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
}

Var unary(Var a, Op op, Mat value, double c = 0.0, Eigen::Index i0 = 0, Eigen::Index i1 = 0) {
  Tape& t = tape_of(a, "unary");
  Node n;
  n.op = op;
  n.a = a.id();
  n.c = c;
  n.i0 = i0;
  n.i1 = i1;
  n.requires_grad = t.node(a.id()).requires_grad;
  n.value = std::move(value);
  return t.record(std::move(n));
}

Var binary(Var a, Var b, Op op, Mat value, const char* name) {
  Tape& t = same_tape(a, b, name);
  Node n;
  n.op = op;
  n.a = a.id();
  n.b = b.id();
  n.requires_grad = t.node(a.id()).requires_grad || t.node(b.id()).requires_grad;
  n.value = std::move(value);
  return t.record(std::move(n));
}

}  // namespace

Var operator+(Var a, Var b) {
  require_same_shape(a, b, "add");
  return binary(a, b, Op::Add, a.value() + b.value(), "add");
}

Var operator-(Var a, Var b) {
  require_same_shape(a, b, "sub");
  return binary(a, b, Op::Sub, a.value() - b.value(), "sub");
}

Var operator-(Var a) { return unary(a, Op::Neg, -a.value()); }

Var operator*(double s, Var a) { return unary(a, Op::Scale, s * a.value(), s); }

Var hadamard(Var a, Var b) {
  require_same_shape(a, b, "hadamard");
  return binary(a, b, Op::Hadamard, a.value().cwiseProduct(b.value()), "hadamard");
}

Var matmul(Var a, Var b) {
  if (a.cols() != b.rows())
    throw ValidationError("matmul: inner dimensions " + std::to_string(a.cols()) + " and " + std::to_string(b.rows()));
  return binary(a, b, Op::MatMul, a.value() * b.value(), "matmul");
}

Var transpose(Var a) { return unary(a, Op::Transpose, a.value().transpose()); }

Var add_columnwise(Var m, Var col) {
  if (col.cols() != 1 || col.rows() != m.rows()) throw ValidationError("add_columnwise: column has wrong shape");
  Mat v = m.value();
  v.colwise() += col.value().col(0);
  return binary(m, col, Op::AddColumn, std::move(v), "add_columnwise");
}

Var selu(Var a) { return unary(a, Op::Selu, a.value().unaryExpr([](double x) { return selu_value(x); })); }

Var selu_prime(Var a) {
  return unary(a, Op::SeluPrime, a.value().unaryExpr([](double x) { return selu_derivative(x); }));
}

Var abs(Var a) { return unary(a, Op::Abs, a.value().cwiseAbs()); }

Var sum(Var a) { return unary(a, Op::Sum, Mat::Constant(1, 1, a.value().sum())); }

Var mean(Var a) {
  const double count = static_cast<double>(a.value().size());
  if (count == 0) throw ValidationError("mean: empty operand");
  return (1.0 / count) * sum(a);
}

Var scale_by(Var a, Var s) {
  if (s.rows() != 1 || s.cols() != 1) throw ValidationError("scale_by: scale must be 1x1");
  return binary(a, s, Op::ScaleBy, s.value()(0, 0) * a.value(), "scale_by");
}

Var rows(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) throw ValidationError("rows: slice out of range");
  return unary(a, Op::RowSlice, a.value().middleRows(start, count), 0.0, start, count);
}

Var cols(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) throw ValidationError("cols: slice out of range");
  return unary(a, Op::ColSlice, a.value().middleCols(start, count), 0.0, start, count);
}

namespace {

Var concat(const std::vector<Var>& parts, bool vertical) {
  const char* name = vertical ? "vcat" : "hcat";
  if (parts.empty()) throw ValidationError(std::string(name) + ": nothing to concatenate");
  Tape& t = tape_of(parts.front(), name);
  Eigen::Index total = 0;
  const Eigen::Index other = vertical ? parts.front().cols() : parts.front().rows();
  Node n;
  n.op = vertical ? Op::VCat : Op::HCat;
  for (const Var& p : parts) {
    if (p.tape() != &t) throw ValidationError(std::string(name) + ": operands live on different tapes");
    if ((vertical ? p.cols() : p.rows()) != other) throw ValidationError(std::string(name) + ": incompatible shapes");
    total += vertical ? p.rows() : p.cols();
    n.args.push_back(p.id());
    n.requires_grad = n.requires_grad || t.node(p.id()).requires_grad;
  }
  n.value.resize(vertical ? total : other, vertical ? other : total);
  Eigen::Index offset = 0;
  for (const Var& p : parts) {
    if (vertical) {
      n.value.middleRows(offset, p.rows()) = p.value();
      offset += p.rows();
    } else {
      n.value.middleCols(offset, p.cols()) = p.value();
      offset += p.cols();
    }
  }
  return t.record(std::move(n));
}

}  // namespace

Var vcat(const std::vector<Var>& parts) { return concat(parts, true); }
Var hcat(const std::vector<Var>& parts) { return concat(parts, false); }

Var tile_h(Var a, int k) {
  if (k < 1) throw ValidationError("tile_h: k must be positive");
  return unary(a, Op::TileH, a.value().replicate(1, k), 0.0, k);
}

Var lower_triangular(Var packed, int k) {
  if (k < 1 || packed.cols() != 1 || packed.rows() != static_cast<Eigen::Index>(k) * (k + 1) / 2)
    throw ValidationError("lower_triangular: packed vector must have k(k+1)/2 entries");
  Mat out = Mat::Zero(k, k);
  Eigen::Index idx = 0;
  for (int r = 0; r < k; ++r)
    for (int c = 0; c <= r; ++c) out(r, c) = packed.value()(idx++, 0);
  return unary(packed, Op::LowerTri, std::move(out), 0.0, k);
}

Var reshape(Var a, Eigen::Index r, Eigen::Index c) {
  if (r * c != a.value().size()) throw ValidationError("reshape: size mismatch");
  return unary(a, Op::Reshape, a.value().reshaped(r, c), 0.0, r, c);
}

Var kron_cols(Var a, Var b) {
  if (a.cols() != b.cols()) throw ValidationError("kron_cols: column counts differ");
  const Eigen::Index p = a.rows();
  const Eigen::Index q = b.rows();
  Mat out(p * q, a.cols());
  for (Eigen::Index col = 0; col < a.cols(); ++col)
    for (Eigen::Index i = 0; i < p; ++i) out.block(i * q, col, q, 1) = a.value()(i, col) * b.value().col(col);
  return binary(a, b, Op::KronCols, std::move(out), "kron_cols");
}

}  // namespace hamembed::diffkit
