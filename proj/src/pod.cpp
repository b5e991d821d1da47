#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "hamembed/errors.hpp"
#include "hamembed/pod.hpp"

namespace hamembed::pod {

Mat PODBasis::projector() const {
  Mat P = Mat::Zero(2 * V.rows(), 2 * V.cols());
  P.topLeftCorner(V.rows(), V.cols()) = V;
  P.bottomRightCorner(V.rows(), V.cols()) = V;
  return P;
}

Mat assemble_snapshots(const std::vector<Mat>& states) {
  if (states.empty()) throw ValidationError("assemble_snapshots: no data");
  const Eigen::Index dim = states.front().rows();
  if (dim == 0 || dim % 2 != 0) throw ValidationError("assemble_snapshots: state dimension must be even and positive");
  Eigen::Index total = 0;
  for (const Mat& s : states) {
    if (s.rows() != dim) throw ValidationError("assemble_snapshots: ragged state dimensions");
    total += s.cols();
  }
  const Eigen::Index N = dim / 2;
  Mat out(N, 2 * total);
  Eigen::Index c = 0;
  for (const Mat& s : states) {
    out.middleCols(c, s.cols()) = s.topRows(N);
    out.middleCols(total + c, s.cols()) = s.bottomRows(N);
    c += s.cols();
  }
  return out;
}

Mat assemble_snapshots(const std::vector<integrate::Trajectory>& data) {
  std::vector<Mat> states;
  states.reserve(data.size());
  for (const auto& t : data) states.push_back(t.states);
  return assemble_snapshots(states);
}

namespace {

// Modified Gram-Schmidt, twice, on the columns of A.
void orthonormalize(Mat& A) {
  for (int pass = 0; pass < 2; ++pass)
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
      for (Eigen::Index i = 0; i < j; ++i) A.col(j) -= A.col(i).dot(A.col(j)) * A.col(i);
      const double norm = A.col(j).norm();
      if (!(norm > 0.0)) throw NumericalError("pod_basis: degenerate mode during re-orthonormalization");
      A.col(j) /= norm;
    }
}

}  // namespace

PODBasis pod_basis(const Mat& S, int r) {
  if (S.size() == 0) throw ValidationError("pod_basis: empty snapshot matrix");
  if (r < 1) throw ValidationError("pod_basis: r must be >= 1");
  if (!S.allFinite()) throw NumericalError("pod_basis: snapshot matrix has non-finite entries");
  const Eigen::Index N = S.rows();
  const Eigen::Index cols = S.cols();
  const bool small_side = cols < N;
  const Mat G = small_side ? Mat(S.transpose() * S) : Mat(S * S.transpose());
  const SymmetricEigen eig = jacobi_eigen(G);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(G.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return eig.values(a) > eig.values(b); });

  PODBasis basis;
  basis.N = static_cast<int>(N);
  basis.r = r;
  const Eigen::Index count = std::min(N, cols);
  basis.singular_values.resize(count);
  for (Eigen::Index i = 0; i < count; ++i)
    basis.singular_values(i) = std::sqrt(std::max(0.0, eig.values(order[static_cast<std::size_t>(i)])));

  if (r > count) throw ValidationError("pod_basis: r exceeds the number of singular values");
  // Singular values from a Gram eigendecomposition carry an absolute error of
  // about s1*sqrt(eps*dim); anything below that is numerically zero.
  const double s1 = basis.singular_values(0);
  const double floor =
      s1 * std::max(1e-12, std::sqrt(8.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(G.rows())));
  if (!(basis.singular_values(r - 1) > floor))
    throw ValidationError("pod_basis: r = " + std::to_string(r) + " exceeds the numerical rank");

  basis.V.resize(N, r);
  for (int k = 0; k < r; ++k) {
    const Vec u = eig.vectors.col(order[static_cast<std::size_t>(k)]);
    basis.V.col(k) = small_side ? Vec(S * u / basis.singular_values(k)) : u;
  }
  orthonormalize(basis.V);
  for (int k = 0; k < r; ++k) {
    Eigen::Index big;
    basis.V.col(k).cwiseAbs().maxCoeff(&big);
    if (basis.V(big, k) < 0) basis.V.col(k) *= -1.0;
  }
  return basis;
}

double energy_fraction(const Vec& s, int r) {
  if (s.size() == 0) throw ValidationError("energy_fraction: empty spectrum");
  if (r < 0 || r > s.size()) throw ValidationError("energy_fraction: r out of range");
  const double total = s.squaredNorm();
  if (!(total > 0.0)) throw ValidationError("energy_fraction: zero spectrum");
  return s.head(r).squaredNorm() / total;
}

Mat project(const PODBasis& basis, const Mat& X) {
  if (X.rows() != 2 * basis.N) throw ValidationError("project: state dimension must be 2N = " + std::to_string(2 * basis.N));
  Mat out(2 * basis.r, X.cols());
  out.topRows(basis.r) = basis.V.transpose() * X.topRows(basis.N);
  out.bottomRows(basis.r) = basis.V.transpose() * X.bottomRows(basis.N);
  return out;
}

Mat lift(const PODBasis& basis, const Mat& Y) {
  if (Y.rows() != 2 * basis.r) throw ValidationError("lift: coordinate dimension must be 2r = " + std::to_string(2 * basis.r));
  Mat out(2 * basis.N, Y.cols());
  out.topRows(basis.N) = basis.V * Y.topRows(basis.r);
  out.bottomRows(basis.N) = basis.V * Y.bottomRows(basis.r);
  return out;
}

}  // namespace hamembed::pod
