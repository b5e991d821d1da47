#pragma once

#include <Eigen/Dense>

namespace hamembed {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// J_{2m} = [[0, I_m], [-I_m, 0]].
Mat symplectic_form(int m);

/// Applies J_{2m} to v without forming the matrix: (v_p, -v_q).
Vec apply_symplectic(const Vec& v);

struct SymmetricEigen {
  Vec values;   // in the order produced by the sweep (not sorted)
  Mat vectors;  // column k pairs with values(k)
  int sweeps = 0;
};

/// Cyclic Jacobi eigensolver for a symmetric matrix. Iterates until the
/// off-diagonal Frobenius norm drops below tol * ||A||_F.
SymmetricEigen jacobi_eigen(const Mat& a, double tol = 1e-12, int max_sweeps = 100);

/// Smallest eigenvalue of a symmetric matrix via jacobi_eigen.
double min_eigenvalue(const Mat& a, double tol = 1e-12);

bool all_finite(const Vec& v);

}  // namespace hamembed
