#pragma once

#include <string>
#include <variant>
#include <vector>

#include "hamembed/diffkit/params.hpp"
#include "hamembed/diffkit/tape.hpp"
#include "hamembed/linalg.hpp"
#include "hamembed/random.hpp"

namespace hamembed::latentham {

enum class Variant { QuadraticSOS, QuarticSOS, CubicPoly };

/// Embedding names: "s-linear-embs", "s-cubic-embs", "quad-embs".
Variant parse_variant(const std::string& name);
std::string variant_name(Variant v);
bool is_sos(Variant v);

inline constexpr double kDefaultEps = 1e-6;

/// Size of the lifted vector z: 2m+1 (quadratic) or 4m+1 (quartic).
int lifted_dim(Variant v, int m);
/// z = [y; w] or [y; y∘y; w].
Vec lift(Variant v, const Vec& y, double w);

/// H(y) = z'Qz with Q symmetric positive semi-definite.
struct SosHamiltonian {
  Variant variant = Variant::QuadraticSOS;
  int m = 0;
  Mat Q;
  double w = 1.0;

  /// Q = L L' + eps I, with only the lower triangle of L used.
  static SosHamiltonian from_factor(Variant v, int m, const Mat& L, double eps = kDefaultEps, double w = 1.0);
  static SosHamiltonian from_matrix(Variant v, int m, const Mat& Q, double w = 1.0);
};

/// General polynomial of degree <= 3 in 2m variables, monomial basis.
class CubicPoly {
 public:
  explicit CubicPoly(int m);

  int m() const { return m_; }
  int dim() const { return 2 * m_; }
  /// Monomials as sorted variable-index lists, ordered by degree then
  /// lexicographically: 1, y0, y1, ..., y0y0, y0y1, ...
  const std::vector<std::vector<int>>& monomials() const { return monomials_; }
  Vec& coeffs() { return coeffs_; }
  const Vec& coeffs() const { return coeffs_; }

  /// Coefficient of the monomial prod_k y[vars[k]] (order of vars irrelevant).
  void set(std::vector<int> vars, double c);
  int index_of(std::vector<int> vars) const;

  double value(const Vec& y) const;
  Vec gradient(const Vec& y) const;

 private:
  int m_;
  std::vector<std::vector<int>> monomials_;
  Vec coeffs_;
};

using LatentHamiltonian = std::variant<SosHamiltonian, CubicPoly>;

int latent_dim(const LatentHamiltonian& model);
double latent_h(const LatentHamiltonian& model, const Vec& y);
Vec latent_grad(const LatentHamiltonian& model, const Vec& y);
/// J_{2m} grad H(y).
Vec latent_vector_field(const LatentHamiltonian& model, const Vec& y);

/// Smallest eigenvalue of Q (Jacobi, tolerance 1e-10). Throws for CubicPoly.
double sos_min_eig(const LatentHamiltonian& model);
/// B = H(y0) / sigma_min(Q). Throws for CubicPoly.
double stability_bound(const LatentHamiltonian& model, const Vec& y0);
/// The quantity bounded by B along exact flows: |y|^2 (quadratic) or
/// |y|^2 + |y∘y|^2 (quartic, Hadamard lift).
double certified_quantity(const SosHamiltonian& model, const Vec& y);

struct PsdDecomposition {
  Mat V;        // rank x dim, orthonormal rows
  Mat Q1;       // rank x rank, diagonal positive
  int rank = 0;
  Vec kept;     // eigenvalues > tol, descending
  Vec dropped;  // remaining eigenvalues
};

/// Q = V' Q1 V from the eigenpairs above tol. Throws NumericalError when an
/// eigenvalue is below -tol ("not PSD") or nothing is kept ("no positive part").
PsdDecomposition psd_decompose(const Mat& Q, double tol = 1e-10);

// ---- trainable parameterization ----

/// Segment name of the Hamiltonian parameters: packed lower-triangular L for
/// SOS variants, monomial coefficients for CubicPoly.
inline constexpr const char* kHamSegment = "ham.theta";

Eigen::Index latent_param_count(Variant v, int m);
void add_latent_segment(diffkit::ParamLayout& layout, Variant v, int m);
/// SOS: L = diag_scale * I plus uniform(-jitter, jitter) below the diagonal.
/// Cubic: uniform(-jitter, jitter) on every coefficient.
void init_latent(diffkit::ParamVector& params, Variant v, int m, Rng& rng, double diag_scale, double jitter);
/// Materializes the model described by the parameter vector.
LatentHamiltonian latent_from_params(const diffkit::ParamVector& params, Variant v, int m, double eps = kDefaultEps,
                                     double w = 1.0);

/// Batched gradient on the tape: Y is 2m x B, result 2m x B.
diffkit::Var latent_grad_tape(Variant v, int m, diffkit::Var theta, diffkit::Var Y, double eps = kDefaultEps,
                              double w = 1.0);
/// Batched Hamiltonian values on the tape (1 x B).
diffkit::Var latent_h_tape(Variant v, int m, diffkit::Var theta, diffkit::Var Y, double eps = kDefaultEps,
                           double w = 1.0);

}  // namespace hamembed::latentham
