#include "hamembed/linalg.hpp"

#include <Eigen/Jacobi>
#include <cmath>

#include "hamembed/errors.hpp"

namespace hamembed {

Mat symplectic_form(int m) {
  if (m < 1) throw ValidationError("symplectic_form: m must be >= 1");
  Mat j = Mat::Zero(2 * m, 2 * m);
  j.topRightCorner(m, m).setIdentity();
  j.bottomLeftCorner(m, m) = -Mat::Identity(m, m);
  return j;
}

Vec apply_symplectic(const Vec& v) {
  const Eigen::Index m = v.size() / 2;
  if (v.size() != 2 * m || m == 0) throw ValidationError("apply_symplectic: odd or empty vector");
  Vec out(v.size());
  out.head(m) = v.tail(m);
  out.tail(m) = -v.head(m);
  return out;
}

SymmetricEigen jacobi_eigen(const Mat& input, double tol, int max_sweeps) {
  if (input.rows() != input.cols()) throw ValidationError("jacobi_eigen: matrix is not square");
  const Eigen::Index n = input.rows();
  Mat a = 0.5 * (input + input.transpose());
  Mat v = Mat::Identity(n, n);
  const double scale = a.norm();
  SymmetricEigen out;
  if (n == 0) return out;

  auto off_norm = [&] {
    double s = 0.0;
    for (Eigen::Index c = 0; c < n; ++c)
      for (Eigen::Index r = 0; r < n; ++r)
        if (r != c) s += a(r, c) * a(r, c);
    return std::sqrt(s);
  };

  int sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    if (off_norm() <= tol * scale) break;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        Eigen::JacobiRotation<double> rot;
        rot.makeJacobi(a, p, q);
        a.applyOnTheLeft(p, q, rot.adjoint());
        a.applyOnTheRight(p, q, rot);
        v.applyOnTheRight(p, q, rot);
        a(p, q) = 0.0;
        a(q, p) = 0.0;
      }
    }
  }
  if (off_norm() > tol * scale * 10.0)
    throw NumericalError("jacobi_eigen: no convergence after " + std::to_string(max_sweeps) + " sweeps");
  out.values = a.diagonal();
  out.vectors = std::move(v);
  out.sweeps = sweep;
  return out;
}

double min_eigenvalue(const Mat& a, double tol) { return jacobi_eigen(a, tol).values.minCoeff(); }

bool all_finite(const Vec& v) { return v.allFinite(); }

}  // namespace hamembed
