#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "hamembed/errors.hpp"
#include "hamembed/latentham.hpp"

namespace hamembed::latentham {

using diffkit::Var;
using diffkit::vcat;

Variant parse_variant(const std::string& name) {
  if (name == "s-linear-embs") return Variant::QuadraticSOS;
  if (name == "s-cubic-embs") return Variant::QuarticSOS;
  if (name == "quad-embs") return Variant::CubicPoly;
  throw ValidationError("unknown variant '" + name + "' (expected s-linear-embs, s-cubic-embs or quad-embs)");
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::QuadraticSOS:
      return "s-linear-embs";
    case Variant::QuarticSOS:
      return "s-cubic-embs";
    case Variant::CubicPoly:
      return "quad-embs";
  }
  return "";
}

bool is_sos(Variant v) { return v != Variant::CubicPoly; }

int lifted_dim(Variant v, int m) {
  if (!is_sos(v)) throw ValidationError("lifted_dim: CubicPoly has no lifted vector");
  return v == Variant::QuadraticSOS ? 2 * m + 1 : 4 * m + 1;
}

Vec lift(Variant v, const Vec& y, double w) {
  const Eigen::Index d = y.size();
  Vec z(lifted_dim(v, static_cast<int>(d / 2)));
  z.head(d) = y;
  if (v == Variant::QuarticSOS) z.segment(d, d) = y.cwiseProduct(y);
  z(z.size() - 1) = w;
  return z;
}

namespace {

void check_m(int m) {
  if (m < 1) throw ValidationError("latent half-dimension m must be positive");
}

void check_y(int m, const Vec& y) {
  if (y.size() != 2 * m)
    throw ValidationError("latent state has dimension " + std::to_string(y.size()) + ", expected " +
                          std::to_string(2 * m));
}

}  // namespace

SosHamiltonian SosHamiltonian::from_factor(Variant v, int m, const Mat& L, double eps, double w) {
  check_m(m);
  const int k = lifted_dim(v, m);
  if (L.rows() != k || L.cols() != k) throw ValidationError("factor L must be " + std::to_string(k) + "x" + std::to_string(k));
  Mat low = L.triangularView<Eigen::Lower>();
  return SosHamiltonian{v, m, low * low.transpose() + eps * Mat::Identity(k, k), w};
}

SosHamiltonian SosHamiltonian::from_matrix(Variant v, int m, const Mat& Q, double w) {
  check_m(m);
  const int k = lifted_dim(v, m);
  if (Q.rows() != k || Q.cols() != k) throw ValidationError("Q must be " + std::to_string(k) + "x" + std::to_string(k));
  if (!(Q - Q.transpose()).isZero(1e-12 * std::max(1.0, Q.norm()))) throw ValidationError("Q must be symmetric");
  return SosHamiltonian{v, m, 0.5 * (Q + Q.transpose()), w};
}

CubicPoly::CubicPoly(int m) : m_(m) {
  check_m(m);
  const int d = 2 * m;
  monomials_.push_back({});
  for (int i = 0; i < d; ++i) monomials_.push_back({i});
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) monomials_.push_back({i, j});
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j)
      for (int k = j; k < d; ++k) monomials_.push_back({i, j, k});
  coeffs_ = Vec::Zero(static_cast<Eigen::Index>(monomials_.size()));
}

int CubicPoly::index_of(std::vector<int> vars) const {
  std::sort(vars.begin(), vars.end());
  auto it = std::find(monomials_.begin(), monomials_.end(), vars);
  if (it == monomials_.end()) throw ValidationError("monomial is not in the cubic basis");
  return static_cast<int>(it - monomials_.begin());
}

void CubicPoly::set(std::vector<int> vars, double c) { coeffs_(index_of(std::move(vars))) = c; }

double CubicPoly::value(const Vec& y) const {
  check_y(m_, y);
  double h = 0.0;
  for (std::size_t f = 0; f < monomials_.size(); ++f) {
    double term = coeffs_(static_cast<Eigen::Index>(f));
    for (int v : monomials_[f]) term *= y(v);
    h += term;
  }
  return h;
}

Vec CubicPoly::gradient(const Vec& y) const {
  check_y(m_, y);
  Vec g = Vec::Zero(dim());
  for (std::size_t f = 0; f < monomials_.size(); ++f) {
    const auto& mono = monomials_[f];
    const double c = coeffs_(static_cast<Eigen::Index>(f));
    if (c == 0.0) continue;
    for (std::size_t drop = 0; drop < mono.size(); ++drop) {
      double term = c;
      for (std::size_t k = 0; k < mono.size(); ++k)
        if (k != drop) term *= y(mono[k]);
      g(mono[drop]) += term;
    }
  }
  return g;
}

int latent_dim(const LatentHamiltonian& model) {
  return std::visit([](const auto& h) {
    if constexpr (std::is_same_v<std::decay_t<decltype(h)>, SosHamiltonian>)
      return 2 * h.m;
    else
      return h.dim();
  }, model);
}

double latent_h(const LatentHamiltonian& model, const Vec& y) {
  if (const auto* sos = std::get_if<SosHamiltonian>(&model)) {
    check_y(sos->m, y);
    const Vec z = lift(sos->variant, y, sos->w);
    return z.dot(sos->Q * z);
  }
  return std::get<CubicPoly>(model).value(y);
}

Vec latent_grad(const LatentHamiltonian& model, const Vec& y) {
  if (const auto* sos = std::get_if<SosHamiltonian>(&model)) {
    check_y(sos->m, y);
    const Eigen::Index d = y.size();
    const Vec qz = sos->Q * lift(sos->variant, y, sos->w);
    Vec g = 2.0 * qz.head(d);
    if (sos->variant == Variant::QuarticSOS) g += 4.0 * y.cwiseProduct(qz.segment(d, d));
    return g;
  }
  return std::get<CubicPoly>(model).gradient(y);
}

Vec latent_vector_field(const LatentHamiltonian& model, const Vec& y) { return apply_symplectic(latent_grad(model, y)); }

namespace {

const SosHamiltonian& require_sos(const LatentHamiltonian& model, const char* what) {
  const auto* sos = std::get_if<SosHamiltonian>(&model);
  if (sos == nullptr) throw ValidationError(std::string(what) + ": quad-embs (CubicPoly) models carry no certificate");
  return *sos;
}

}  // namespace

double sos_min_eig(const LatentHamiltonian& model) { return min_eigenvalue(require_sos(model, "sos_min_eig").Q, 1e-10); }

double stability_bound(const LatentHamiltonian& model, const Vec& y0) {
  require_sos(model, "stability_bound");
  const double sigma = sos_min_eig(model);
  if (!(sigma > 0.0)) throw NumericalError("stability_bound: Q is not positive definite (sigma_min <= 0)");
  return latent_h(model, y0) / sigma;
}

double certified_quantity(const SosHamiltonian& model, const Vec& y) {
  check_y(model.m, y);
  const double q = y.squaredNorm();
  return model.variant == Variant::QuarticSOS ? q + y.cwiseProduct(y).squaredNorm() : q;
}

PsdDecomposition psd_decompose(const Mat& Q, double tol) {
  if (Q.rows() != Q.cols() || Q.rows() == 0) throw ValidationError("psd_decompose: Q must be square and non-empty");
  if (!(Q - Q.transpose()).isZero(1e-12 * std::max(1.0, Q.norm()))) throw ValidationError("psd_decompose: Q must be symmetric");
  const SymmetricEigen eig = jacobi_eigen(Q);
  const Eigen::Index n = Q.rows();
  std::vector<Eigen::Index> keep;
  std::vector<double> dropped;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double lam = eig.values(i);
    if (lam < -tol) throw NumericalError("psd_decompose: not PSD (eigenvalue " + std::to_string(lam) + ")");
    if (lam > tol)
      keep.push_back(i);
    else
      dropped.push_back(lam);
  }
  if (keep.empty()) throw NumericalError("psd_decompose: no positive part (all eigenvalues <= tol)");
  std::stable_sort(keep.begin(), keep.end(), [&](Eigen::Index a, Eigen::Index b) { return eig.values(a) > eig.values(b); });

  PsdDecomposition out;
  out.rank = static_cast<int>(keep.size());
  out.V.resize(out.rank, n);
  out.kept.resize(out.rank);
  for (int r = 0; r < out.rank; ++r) {
    Vec v = eig.vectors.col(keep[static_cast<std::size_t>(r)]);
    Eigen::Index big;
    v.cwiseAbs().maxCoeff(&big);
    if (v(big) < 0) v = -v;
    out.V.row(r) = v.transpose();
    out.kept(r) = eig.values(keep[static_cast<std::size_t>(r)]);
  }
  out.Q1 = out.kept.asDiagonal();
  out.dropped = Eigen::Map<Vec>(dropped.data(), static_cast<Eigen::Index>(dropped.size()));
  return out;
}

Eigen::Index latent_param_count(Variant v, int m) {
  check_m(m);
  if (v == Variant::CubicPoly) return CubicPoly(m).coeffs().size();
  const Eigen::Index k = lifted_dim(v, m);
  return k * (k + 1) / 2;
}

void add_latent_segment(diffkit::ParamLayout& layout, Variant v, int m) {
  layout.add(kHamSegment, latent_param_count(v, m), 1, diffkit::ParamGroup::Hamiltonian);
}

void init_latent(diffkit::ParamVector& params, Variant v, int m, Rng& rng, double diag_scale, double jitter) {
  Mat theta(latent_param_count(v, m), 1);
  if (v == Variant::CubicPoly) {
    for (Eigen::Index i = 0; i < theta.rows(); ++i) theta(i, 0) = rng.uniform(-jitter, jitter);
  } else {
    const int k = lifted_dim(v, m);
    Eigen::Index idx = 0;
    for (int r = 0; r < k; ++r)
      for (int c = 0; c <= r; ++c) theta(idx++, 0) = r == c ? diag_scale : rng.uniform(-jitter, jitter);
  }
  params.set(kHamSegment, theta);
}

LatentHamiltonian latent_from_params(const diffkit::ParamVector& params, Variant v, int m, double eps, double w) {
  const Mat theta = params.get(kHamSegment);
  if (theta.rows() != latent_param_count(v, m)) throw ValidationError("Hamiltonian parameter block has the wrong size");
  if (v == Variant::CubicPoly) {
    CubicPoly poly(m);
    poly.coeffs() = theta.col(0);
    return poly;
  }
  const int k = lifted_dim(v, m);
  Mat L = Mat::Zero(k, k);
  Eigen::Index idx = 0;
  for (int r = 0; r < k; ++r)
    for (int c = 0; c <= r; ++c) L(r, c) = theta(idx++, 0);
  return SosHamiltonian::from_factor(v, m, L, eps, w);
}

namespace {

struct CubicTapeTables {
  Mat quad_select;   // selects i<=j rows of kron(Y,Y)
  Mat cubic_select;  // selects i<=j<=k rows of kron(Y,kron(Y,Y))
  Mat grad_map;      // (d * n_low) x n_coeffs, n_low = monomials of degree <= 2
  Eigen::Index n_low = 0;
};

const CubicTapeTables& cubic_tables(int m) {
  static std::map<int, CubicTapeTables> cache;
  auto it = cache.find(m);
  if (it != cache.end()) return it->second;

  const CubicPoly basis(m);
  const int d = 2 * m;
  const auto& monos = basis.monomials();
  CubicTapeTables t;
  std::vector<Eigen::Index> quad_rows, cubic_rows;
  for (const auto& mono : monos) {
    if (mono.size() == 2) quad_rows.push_back(mono[0] * d + mono[1]);
    if (mono.size() == 3) cubic_rows.push_back((mono[0] * d + mono[1]) * d + mono[2]);
  }
  t.quad_select = Mat::Zero(static_cast<Eigen::Index>(quad_rows.size()), d * d);
  for (std::size_t r = 0; r < quad_rows.size(); ++r) t.quad_select(static_cast<Eigen::Index>(r), quad_rows[r]) = 1.0;
  t.cubic_select = Mat::Zero(static_cast<Eigen::Index>(cubic_rows.size()), d * d * d);
  for (std::size_t r = 0; r < cubic_rows.size(); ++r) t.cubic_select(static_cast<Eigen::Index>(r), cubic_rows[r]) = 1.0;

  t.n_low = 1 + d + static_cast<Eigen::Index>(quad_rows.size());
  t.grad_map = Mat::Zero(d * t.n_low, static_cast<Eigen::Index>(monos.size()));
  for (std::size_t f = 0; f < monos.size(); ++f) {
    const auto& mono = monos[f];
    for (std::size_t drop = 0; drop < mono.size(); ++drop) {
      std::vector<int> rest;
      for (std::size_t k = 0; k < mono.size(); ++k)
        if (k != drop) rest.push_back(mono[k]);
      const Eigen::Index low = basis.index_of(rest);
      t.grad_map(mono[drop] + low * d, static_cast<Eigen::Index>(f)) += 1.0;
    }
  }
  return cache.emplace(m, std::move(t)).first->second;
}

Var low_features(const CubicTapeTables& t, Var Y) {
  diffkit::Tape& tape = *Y.tape();
  Var ones = tape.constant(Mat::Ones(1, Y.cols()));
  Var quad = matmul(tape.constant(t.quad_select), kron_cols(Y, Y));
  return vcat({ones, Y, quad});
}

Var sos_lifted(Variant v, Var Y, double w) {
  diffkit::Tape& tape = *Y.tape();
  Var wrow = tape.constant(Mat::Constant(1, Y.cols(), w));
  if (v == Variant::QuarticSOS) return vcat({Y, hadamard(Y, Y), wrow});
  return vcat({Y, wrow});
}

Var sos_q(Variant v, int m, Var theta, double eps) {
  const int k = lifted_dim(v, m);
  Var L = lower_triangular(theta, k);
  return matmul(L, transpose(L)) + theta.tape()->constant(eps * Mat::Identity(k, k));
}

void check_tape_inputs(Variant v, int m, Var theta, Var Y) {
  check_m(m);
  if (Y.rows() != 2 * m) throw ValidationError("latent batch must have 2m rows");
  if (theta.rows() != latent_param_count(v, m) || theta.cols() != 1)
    throw ValidationError("Hamiltonian parameter block has the wrong size");
}

}  // namespace

Var latent_grad_tape(Variant v, int m, Var theta, Var Y, double eps, double w) {
  check_tape_inputs(v, m, theta, Y);
  const int d = 2 * m;
  if (v == Variant::CubicPoly) {
    const CubicTapeTables& t = cubic_tables(m);
    Var M = reshape(matmul(theta.tape()->constant(t.grad_map), theta), d, t.n_low);
    return matmul(M, low_features(t, Y));
  }
  Var qz = matmul(sos_q(v, m, theta, eps), sos_lifted(v, Y, w));
  Var g = 2.0 * rows(qz, 0, d);
  if (v == Variant::QuarticSOS) g = g + 4.0 * hadamard(Y, rows(qz, d, d));
  return g;
}

Var latent_h_tape(Variant v, int m, Var theta, Var Y, double eps, double w) {
  check_tape_inputs(v, m, theta, Y);
  diffkit::Tape& tape = *Y.tape();
  if (v == Variant::CubicPoly) {
    const CubicTapeTables& t = cubic_tables(m);
    Var cubic = matmul(tape.constant(t.cubic_select), kron_cols(Y, kron_cols(Y, Y)));
    return matmul(transpose(theta), vcat({low_features(t, Y), cubic}));
  }
  Var Z = sos_lifted(v, Y, w);
  Var qz = matmul(sos_q(v, m, theta, eps), Z);
  return matmul(tape.constant(Mat::Ones(1, Z.rows())), hadamard(Z, qz));
}

}  // namespace hamembed::latentham
