#include "hamembed/hamsys.hpp"

#include <cmath>
#include <sstream>

#include "hamembed/errors.hpp"
#include "hamembed/random.hpp"

namespace hamembed::hamsys {

CanonicalSystem::CanonicalSystem(std::string name, int n, ScalarFn hamiltonian, VectorFn gradient,
                                 SystemParams params)
    : name_(std::move(name)), n_(n), h_(std::move(hamiltonian)), grad_(std::move(gradient)), params_(params) {
  if (n_ < 1) throw ValidationError("CanonicalSystem: half-dimension must be positive");
}

void CanonicalSystem::check_dim(const Vec& x, const char* what) const {
  if (x.size() != dim()) {
    std::ostringstream msg;
    msg << name_ << "." << what << ": expected state of dimension " << dim() << ", got " << x.size();
    throw ValidationError(msg.str());
  }
}

double CanonicalSystem::hamiltonian(const Vec& x) const {
  check_dim(x, "hamiltonian");
  return h_(x);
}

Vec CanonicalSystem::gradient(const Vec& x) const {
  check_dim(x, "gradient");
  return grad_(x);
}

Vec CanonicalSystem::vector_field(const Vec& x) const {
  check_dim(x, "vector_field");
  if (!x.allFinite()) throw NumericalError(name_ + ".vector_field: non-finite state");
  return apply_symplectic(grad_(x));
}

CanonicalSystem make_pendulum() {
  return CanonicalSystem(
      "pendulum", 1, [](const Vec& x) { return (1.0 - std::cos(x(0))) + 0.5 * x(1) * x(1); },
      [](const Vec& x) {
        Vec g(2);
        g << std::sin(x(0)), x(1);
        return g;
      });
}

CanonicalSystem make_oscillator() {
  return CanonicalSystem(
      "oscillator", 1,
      [](const Vec& x) { return 0.5 * x(1) * x(1) + 0.5 * x(0) * x(0) + 0.25 * x(0) * x(0); },
      [](const Vec& x) {
        Vec g(2);
        g << 1.5 * x(0), x(1);
        return g;
      });
}

CanonicalSystem make_lotka_volterra() {
  return CanonicalSystem(
      "lotka-volterra", 1,
      [](const Vec& x) { return x(1) - std::exp(x(1)) + 2.0 * x(0) - std::exp(x(0)); },
      [](const Vec& x) {
        Vec g(2);
        g << 2.0 - std::exp(x(0)), 1.0 - std::exp(x(1));
        return g;
      });
}

CanonicalSystem make_cubic_oscillator() {
  return CanonicalSystem(
      "cubic", 1,
      [](const Vec& x) { return 0.5 * x(1) * x(1) + 0.5 * x(0) * x(0) + x(0) * x(0) * x(0) / 3.0; },
      [](const Vec& x) {
        Vec g(2);
        g << x(0) + x(0) * x(0), x(1);
        return g;
      });
}

Mat periodic_laplacian(int grid_points, double dzeta) {
  const int n = grid_points;
  Mat d = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    d(i, i) = -2.0;
    d(i, (i + 1) % n) += 1.0;
    d(i, (i + n - 1) % n) += 1.0;
  }
  return d / (dzeta * dzeta);
}

namespace {

// Applies the periodic stencil without forming the matrix.
Vec apply_laplacian(const Eigen::Ref<const Vec>& u, double inv_dz2) {
  const Eigen::Index n = u.size();
  Vec out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double left = u((i + n - 1) % n);
    const double right = u((i + 1) % n);
    out(i) = (left - 2.0 * u(i) + right) * inv_dz2;
  }
  return out;
}

SystemParams grid_params(int grid_points, double lo, double hi) {
  if (grid_points < 8) throw ValidationError("spatial grid needs at least 8 points");
  if (!(hi > lo)) throw ValidationError("spatial domain must satisfy lo < hi");
  SystemParams p;
  p.grid_points = grid_points;
  p.domain_lo = lo;
  p.domain_hi = hi;
  p.dzeta = (hi - lo) / grid_points;
  return p;
}

}  // namespace

CanonicalSystem build_nls_system(int grid_points, double domain_lo, double domain_hi, bool periodic) {
  if (!periodic) throw ValidationError("build_nls_system: only periodic boundary conditions are supported");
  SystemParams params = grid_params(grid_points, domain_lo, domain_hi);
  const int n = grid_points;
  const double inv_dz2 = 1.0 / (params.dzeta * params.dzeta);
  // With alpha = 1/2, beta = 1 the semi-discrete flow reads
  //   q' = -1/2 D p - (q^2+p^2) p,  p' = 1/2 D q + (q^2+p^2) q.
  auto h = [n, inv_dz2](const Vec& x) {
    const auto q = x.head(n);
    const auto p = x.tail(n);
    const Vec r = q.array().square() + p.array().square();
    return -0.25 * q.dot(apply_laplacian(q, inv_dz2)) - 0.25 * p.dot(apply_laplacian(p, inv_dz2)) -
           0.25 * r.squaredNorm();
  };
  auto grad = [n, inv_dz2](const Vec& x) {
    const auto q = x.head(n);
    const auto p = x.tail(n);
    const Vec r = q.array().square() + p.array().square();
    Vec g(2 * n);
    g.head(n) = -0.5 * apply_laplacian(q, inv_dz2) - Vec(r.array() * q.array());
    g.tail(n) = -0.5 * apply_laplacian(p, inv_dz2) - Vec(r.array() * p.array());
    return g;
  };
  return CanonicalSystem("nls", n, h, grad, params);
}

CanonicalSystem build_wave_system(int grid_points, double domain_lo, double domain_hi) {
  SystemParams params = grid_params(grid_points, domain_lo, domain_hi);
  const int n = grid_points;
  const double inv_dz2 = 1.0 / (params.dzeta * params.dzeta);
  auto h = [n, inv_dz2](const Vec& x) {
    const auto q = x.head(n);
    const auto p = x.tail(n);
    return 0.5 * p.squaredNorm() - 0.5 * q.dot(apply_laplacian(q, inv_dz2));
  };
  auto grad = [n, inv_dz2](const Vec& x) {
    Vec g(2 * n);
    g.head(n) = -apply_laplacian(x.head(n), inv_dz2);
    g.tail(n) = x.tail(n);
    return g;
  };
  return CanonicalSystem("wave", n, h, grad, params);
}

Mat wave_operator(const CanonicalSystem& wave) {
  const int n = wave.n();
  Mat k = Mat::Zero(2 * n, 2 * n);
  k.topRightCorner(n, n).setIdentity();
  k.bottomLeftCorner(n, n) = periodic_laplacian(n, wave.params().dzeta);
  return k;
}

Vec spatial_grid(const CanonicalSystem& pde) {
  const auto& p = pde.params();
  if (p.grid_points == 0) throw ValidationError(pde.name() + " has no spatial grid");
  return Vec::LinSpaced(p.grid_points, 0.0, p.grid_points - 1.0).array() * p.dzeta + p.domain_lo;
}

Vec nls_initial_state(const CanonicalSystem& nls) {
  const Vec z = spatial_grid(nls);
  Vec x = Vec::Zero(2 * z.size());
  x.head(z.size()) = (0.5 * z).array().cosh().inverse();
  return x;
}

Vec wave_initial_state(const CanonicalSystem& wave, double mu) {
  const Vec z = spatial_grid(wave);
  Vec x = Vec::Zero(2 * z.size());
  x.head(z.size()) = (mu * z).array().cosh().inverse();
  return x;
}

const std::vector<std::string>& system_names() {
  static const std::vector<std::string> names{"pendulum", "oscillator", "lotka-volterra", "nls", "wave"};
  return names;
}

CanonicalSystem make_system(const std::string& name, int grid_points) {
  if (name == "pendulum") return make_pendulum();
  if (name == "oscillator") return make_oscillator();
  if (name == "lotka-volterra") return make_lotka_volterra();
  if (name == "nls") return build_nls_system(grid_points);
  if (name == "wave") return build_wave_system(grid_points);
  throw ValidationError("unknown system '" + name + "'");
}

std::vector<Vec> sample_initial_conditions(const CanonicalSystem& sys, const InitialConditionSpec& spec) {
  if (static_cast<int>(spec.box.size()) != sys.dim())
    throw ValidationError("sample_initial_conditions: box has " + std::to_string(spec.box.size()) +
                          " intervals, system dimension is " + std::to_string(sys.dim()));
  if (spec.count < 1) throw ValidationError("sample_initial_conditions: count must be positive");
  for (const auto& [lo, hi] : spec.box)
    if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi))
      throw ValidationError("sample_initial_conditions: malformed interval");

  Rng rng(spec.seed);
  std::vector<Vec> out;
  out.reserve(spec.count);
  long attempts = 0;
  Vec x(sys.dim());
  while (static_cast<int>(out.size()) < spec.count) {
    const bool starved = attempts >= kMinAttemptsForRate &&
                         static_cast<double>(out.size()) < kMinAcceptanceRate * static_cast<double>(attempts);
    if (attempts >= kMaxSamplingAttempts || starved) {
      std::ostringstream msg;
      msg << "sample_initial_conditions: accepted " << out.size() << " of " << spec.count << " after "
          << attempts << " attempts (acceptance rate " << static_cast<double>(out.size()) / attempts
          << "); energy cap " << spec.energy_cap << " is too restrictive for the box";
      throw NumericalError(msg.str());
    }
    ++attempts;
    for (int i = 0; i < sys.dim(); ++i) x(i) = rng.uniform(spec.box[i].first, spec.box[i].second);
    if (std::isinf(spec.energy_cap) || sys.hamiltonian(x) <= spec.energy_cap) out.push_back(x);
  }
  return out;
}

}  // namespace hamembed::hamsys
