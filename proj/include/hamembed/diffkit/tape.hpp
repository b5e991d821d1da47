#pragma once

#include <cstdint>
#include <initializer_list>
#include <vector>

#include "hamembed/linalg.hpp"

namespace hamembed::diffkit {

class Tape;

/// Handle to a matrix-valued node on a Tape. Cheap to copy; valid while the
/// tape is alive.
class Var {
 public:
  Var() = default;

  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  const Mat& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  /// Value of a 1x1 node.
  double scalar() const;

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

enum class Op : std::uint8_t {
  Leaf,
  Add,
  Sub,
  Neg,
  Scale,
  Hadamard,
  MatMul,
  Transpose,
  AddColumn,
  Selu,
  SeluPrime,
  Abs,
  Sum,
  RowSlice,
  ColSlice,
  VCat,
  HCat,
  TileH,
  LowerTri,
  Reshape,
  KronCols,
  ScaleBy,
};

struct Node {
  Op op = Op::Leaf;
  int a = -1;
  int b = -1;
  std::vector<int> args;  // VCat / HCat operands
  double c = 0.0;
  Eigen::Index i0 = 0;
  Eigen::Index i1 = 0;
  bool requires_grad = false;
  Mat value;
};

/// Reverse-mode tape over dense matrices. Values are computed eagerly when a
/// node is recorded; backward() propagates adjoints from a 1x1 root. Because
/// activation derivatives are themselves recorded nodes (selu_prime), an
/// expression that contains input-Jacobians of a network can be
/// differentiated with respect to the network parameters.
class Tape {
 public:
  Tape() { nodes_.reserve(256); }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Differentiable leaf.
  Var parameter(Mat value);
  /// Leaf excluded from differentiation.
  Var constant(Mat value);

  /// Accumulates d(root)/d(node) into every node that requires a gradient.
  /// Throws ValidationError when root is not 1x1.
  void backward(Var root);

  /// Adjoint of v after backward(); zeros when v does not influence the root.
  Mat grad(Var v) const;

  std::size_t size() const { return nodes_.size(); }
  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }

  /// Records a node whose value has been computed by the caller.
  Var record(Node node);

 private:
  void accumulate(int id, const Mat& contribution);
  void accumulate_block(int id, Eigen::Index r0, Eigen::Index c0, const Mat& contribution);

  std::vector<Node> nodes_;
  std::vector<Mat> adjoints_;
};

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator-(Var a);
Var operator*(double s, Var a);
inline Var operator*(Var a, double s) { return s * a; }

/// Elementwise product.
Var hadamard(Var a, Var b);
Var matmul(Var a, Var b);
Var transpose(Var a);
/// m + col * 1^T: adds a column vector to every column.
Var add_columnwise(Var m, Var col);
/// Scaled exponential linear unit, elementwise.
Var selu(Var a);
/// Elementwise SeLU derivative; differentiable itself.
Var selu_prime(Var a);
Var abs(Var a);
inline Var square(Var a) { return hadamard(a, a); }
/// Sum of all entries (1x1).
Var sum(Var a);
/// Mean of all entries (1x1).
Var mean(Var a);
/// s * a for a 1x1 node s.
Var scale_by(Var a, Var s);
Var rows(Var a, Eigen::Index start, Eigen::Index count);
Var cols(Var a, Eigen::Index start, Eigen::Index count);
Var vcat(const std::vector<Var>& parts);
Var hcat(const std::vector<Var>& parts);
/// [a a ... a] with k copies side by side.
Var tile_h(Var a, int k);
/// k x k lower-triangular matrix from a k(k+1)/2 vector, row-major packing.
Var lower_triangular(Var packed, int k);
/// Column-major reshape.
Var reshape(Var a, Eigen::Index rows, Eigen::Index cols);
/// Column-wise Kronecker product: column j is a_j (x) b_j.
Var kron_cols(Var a, Var b);

// SeLU constants.
inline constexpr double kSeluLambda = 1.0507009873554805;
inline constexpr double kSeluAlpha = 1.6732632423543772;

double selu_value(double x);
double selu_derivative(double x);
double selu_second_derivative(double x);

}  // namespace hamembed::diffkit
